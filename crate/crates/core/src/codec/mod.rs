//! Tabular data in and out: CSV ingestion, the row-object wire string
//! exchanged with clients, and download serializers.

mod csv;
mod dataset;
mod wire;

use thiserror::Error;

use crate::tensor::TensorError;

pub use self::csv::{export, parse_csv, ExportFormat};
pub use self::dataset::{format_number, lex_number, Cell, Dataset};
pub use self::wire::{decode_wire, encode_wire, WirePayload};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("E_EMPTY: {0}")]
    Empty(String),
    #[error("E_EMPTY: column {index} has an empty name")]
    EmptyColumnName { index: usize },
    #[error("E_RAGGED: row {row} has {found} fields, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("E_ENCODING: input is not valid UTF-8 (byte {valid_up_to})")]
    Encoding { valid_up_to: usize },
    #[error("E_DUP_COLUMN: column name {0:?} appears more than once")]
    DupColumn(String),
    #[error("E_NON_FINITE: row {row} holds a NaN or infinite number")]
    NonFinite { row: usize },
    #[error("E_CSV_SYNTAX: {0}")]
    CsvSyntax(String),
    #[error("E_WIRE_SYNTAX: {message} at byte {offset}")]
    WireSyntax { offset: usize, message: String },
    #[error("E_KEY_MISMATCH: row {row} keys differ from the first row")]
    KeyMismatch { row: usize },
    #[error("E_FORMAT: unsupported export format {0:?}")]
    Format(String),
    #[error("E_SCHEMA: row {row}, column {column:?} is not numeric")]
    Schema {
        row: usize,
        col: usize,
        column: String,
    },
    #[error(transparent)]
    Tensor(TensorError),
}

impl CodecError {
    /// Stable error code for API responses.
    pub fn code(&self) -> &'static str {
        match self {
            CodecError::Empty(_) | CodecError::EmptyColumnName { .. } => "E_EMPTY",
            CodecError::Ragged { .. } => "E_RAGGED",
            CodecError::Encoding { .. } => "E_ENCODING",
            CodecError::DupColumn(_) => "E_DUP_COLUMN",
            CodecError::NonFinite { .. } => "E_NON_FINITE",
            CodecError::CsvSyntax(_) => "E_CSV_SYNTAX",
            CodecError::WireSyntax { .. } => "E_WIRE_SYNTAX",
            CodecError::KeyMismatch { .. } => "E_KEY_MISMATCH",
            CodecError::Format(_) => "E_FORMAT",
            CodecError::Schema { .. } => "E_SCHEMA",
            CodecError::Tensor(e) => e.code(),
        }
    }
}
