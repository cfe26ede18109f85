use std::fmt;
use std::str::FromStr;

use csv::{QuoteStyle, ReaderBuilder, Terminator, WriterBuilder};

use super::{Cell, CodecError, Dataset};

/// Parses RFC 4180 CSV (LF or CRLF, header row mandatory) into a dataset.
/// Cells that lex as finite floats become numbers; everything else is text.
pub fn parse_csv(bytes: &[u8]) -> Result<Dataset, CodecError> {
    let text = std::str::from_utf8(bytes).map_err(|e| CodecError::Encoding {
        valid_up_to: e.valid_up_to(),
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);

    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(CodecError::Empty("no header record".into())),
        Some(r) => r.map_err(|e| CodecError::CsvSyntax(e.to_string()))?,
    };
    let columns: Vec<String> = header.iter().map(str::to_owned).collect();

    let mut rows = Vec::new();
    for (idx, record) in records.enumerate() {
        let record = record.map_err(|e| CodecError::CsvSyntax(e.to_string()))?;
        if record.len() != columns.len() {
            return Err(CodecError::Ragged {
                row: idx,
                expected: columns.len(),
                found: record.len(),
            });
        }
        rows.push(record.iter().map(Cell::parse).collect());
    }
    Dataset::new(columns, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Txt,
}

impl ExportFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            ExportFormat::Csv => "text/csv; charset=utf-8",
            ExportFormat::Txt => "text/plain; charset=utf-8",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Txt => "txt",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "txt" => Ok(ExportFormat::Txt),
            _ => Err(CodecError::Format(s.to_owned())),
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

/// Serializes a dataset for download. CSV output re-parses to the same
/// dataset; TXT is header plus tab-separated rows, LF terminated.
pub fn export(d: &Dataset, format: ExportFormat) -> Vec<u8> {
    let (delimiter, quote_style) = match format {
        ExportFormat::Csv => (b',', QuoteStyle::Necessary),
        ExportFormat::Txt => (b'\t', QuoteStyle::Never),
    };
    let mut writer = WriterBuilder::new()
        .delimiter(delimiter)
        .quote_style(quote_style)
        .terminator(Terminator::Any(b'\n'))
        .from_writer(Vec::new());

    // writing into a Vec cannot fail
    writer.write_record(d.columns()).expect("in-memory write");
    let mut fields: Vec<String> = Vec::with_capacity(d.n_cols());
    for row in d.rows() {
        fields.clear();
        fields.extend(row.iter().map(Cell::to_string));
        writer.write_record(&fields).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}
