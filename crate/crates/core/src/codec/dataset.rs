use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::CodecError;
use crate::scalar::Scalar;
use crate::tensor::{DenseMatrix, TensorError};

/// One table cell. A cell is numeric iff its text lexed as a finite
/// decimal or scientific float when it was read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Number(f64),
    Text(String),
}

impl Cell {
    /// Classifies raw text: numeric if it lexes as a finite float.
    pub fn parse(raw: &str) -> Cell {
        match lex_number(raw) {
            Some(v) => Cell::Number(v),
            None => Cell::Text(raw.to_owned()),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Cell::Number(_))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Number(v) => f.write_str(&format_number(*v)),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Number(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Shortest decimal text that parses back to exactly `v`.
///
/// Very large and very small magnitudes switch to exponent form so that the
/// text stays short; negative zero keeps a fractional part so JSON readers
/// treat it as a float and keep the sign.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0".into() };
    }
    let mag = v.abs();
    if !(1e-5..1e15).contains(&mag) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// `[+-]? (digits [. digits?] | . digits) ([eE] [+-]? digits)?`, finite only.
pub fn lex_number(s: &str) -> Option<f64> {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return None;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return None;
        }
    }
    if i != b.len() {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Deserialize)]
struct RawDataset {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

/// Named columns plus rows of cells: the tabular value every layer passes
/// around.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset")]
pub struct Dataset {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl TryFrom<RawDataset> for Dataset {
    type Error = CodecError;

    fn try_from(raw: RawDataset) -> Result<Self, Self::Error> {
        Dataset::new(raw.columns, raw.rows)
    }
}

impl Dataset {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Cell>>) -> Result<Self, CodecError> {
        let mut seen = HashSet::with_capacity(columns.len());
        for (idx, name) in columns.iter().enumerate() {
            if name.is_empty() {
                return Err(CodecError::EmptyColumnName { index: idx });
            }
            if !seen.insert(name.as_str()) {
                return Err(CodecError::DupColumn(name.clone()));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(CodecError::Ragged {
                    row: r,
                    expected: columns.len(),
                    found: row.len(),
                });
            }
            if row.iter().any(|c| matches!(c, Cell::Number(v) if !v.is_finite())) {
                return Err(CodecError::NonFinite { row: r });
            }
        }
        Ok(Self { columns, rows })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.rows[row][col]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column_cells(&self, col: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.rows.iter().map(move |r| &r[col])
    }

    /// True when every cell of the column is a `Number` (vacuously true with
    /// no rows).
    pub fn is_numeric_column(&self, col: usize) -> bool {
        self.column_cells(col).all(Cell::is_number)
    }

    /// Numeric matrix of the listed columns.
    pub fn to_matrix<T: Scalar>(&self, cols: &[usize]) -> Result<DenseMatrix<T>, CodecError> {
        let mut values = Vec::with_capacity(self.rows.len() * cols.len());
        for (r, row) in self.rows.iter().enumerate() {
            for &c in cols {
                let cell = row.get(c).ok_or(CodecError::Schema {
                    row: r,
                    col: c,
                    column: format!("#{c}"),
                })?;
                match cell {
                    Cell::Number(v) => values.push(T::of(*v)),
                    Cell::Text(_) => {
                        return Err(CodecError::Schema {
                            row: r,
                            col: c,
                            column: self.columns[c].clone(),
                        })
                    }
                }
            }
        }
        DenseMatrix::from_shape_vec(self.rows.len(), cols.len(), values).map_err(|e| match e {
            TensorError::NonFinite { index } => CodecError::NonFinite {
                row: index / cols.len().max(1),
            },
            other => CodecError::Tensor(other),
        })
    }

    /// Copy of this dataset with one extra column appended. The name is
    /// suffixed (`name_2`, `name_3`, ...) if it collides.
    pub fn with_column(&self, name: &str, cells: Vec<Cell>) -> Result<Dataset, CodecError> {
        if cells.len() != self.rows.len() {
            return Err(CodecError::Ragged {
                row: self.rows.len().min(cells.len()),
                expected: self.rows.len(),
                found: cells.len(),
            });
        }
        let name = self.fresh_column_name(name);
        let mut columns = self.columns.clone();
        columns.push(name);
        let rows = self
            .rows
            .iter()
            .zip(cells)
            .map(|(r, c)| {
                let mut r = r.clone();
                r.push(c);
                r
            })
            .collect();
        Dataset::new(columns, rows)
    }

    fn fresh_column_name(&self, base: &str) -> String {
        if self.column_index(base).is_none() {
            return base.to_owned();
        }
        (2..)
            .map(|n| format!("{base}_{n}"))
            .find(|c| self.column_index(c).is_none())
            .expect("unbounded suffix search")
    }

    pub fn into_parts(self) -> (Vec<String>, Vec<Vec<Cell>>) {
        (self.columns, self.rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexer_accepts_decimal_and_scientific() {
        for (s, v) in [
            ("1", 1.0),
            ("-2.5", -2.5),
            ("+.5", 0.5),
            ("3.", 3.0),
            ("1e3", 1000.0),
            ("6.02E-23", 6.02e-23),
        ] {
            assert_eq!(lex_number(s), Some(v), "{s}");
        }
    }

    #[test]
    fn lexer_rejects_non_numbers() {
        for s in ["", "abc", "inf", "NaN", "1e", ".", "-", " 1", "1 ", "1e400", "0x10", "1,5"] {
            assert_eq!(lex_number(s), None, "{s:?}");
        }
    }

    #[test]
    fn number_text_round_trips() {
        for v in [0.0, -0.0, 1.0, -1.5, 0.1, 1e-7, 123456.789, 1e15, 1e300, f64::MIN_POSITIVE] {
            let s = format_number(v);
            let back = lex_number(&s).unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s}");
        }
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(2.5), "2.5");
    }

    #[test]
    fn rejects_duplicate_empty_and_ragged() {
        let dup = Dataset::new(vec!["a".into(), "a".into()], vec![]);
        assert!(matches!(dup, Err(CodecError::DupColumn(_))));
        let empty = Dataset::new(vec!["".into()], vec![]);
        assert!(matches!(empty, Err(CodecError::EmptyColumnName { .. })));
        let ragged = Dataset::new(vec!["a".into()], vec![vec![]]);
        assert!(matches!(ragged, Err(CodecError::Ragged { .. })));
    }

    #[test]
    fn with_column_avoids_collisions() {
        let d = Dataset::new(
            vec!["cluster".into()],
            vec![vec![Cell::Number(1.0)]],
        )
        .unwrap();
        let e = d.with_column("cluster", vec![Cell::Number(0.0)]).unwrap();
        assert_eq!(e.columns(), &["cluster".to_string(), "cluster_2".to_string()]);
    }

    #[test]
    fn to_matrix_flags_text() {
        let d = Dataset::new(
            vec!["x".into(), "y".into()],
            vec![vec![1.0.into(), "abc".into()]],
        )
        .unwrap();
        let m = d.to_matrix::<f64>(&[0]).unwrap();
        assert_eq!(m.as_slice(), &[1.0]);
        assert!(matches!(
            d.to_matrix::<f64>(&[0, 1]),
            Err(CodecError::Schema { row: 0, col: 1, .. })
        ));
    }
}
