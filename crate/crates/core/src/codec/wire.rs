//! The client/server data string: one JSON object per row, keyed by column
//! name, with the objects joined by top-level commas:
//!
//! ```text
//! {"a":1,"b":"x"},{"a":2,"b":"y"}
//! ```
//!
//! Decoding is a single left-to-right pass. Object boundaries are found
//! with a brace depth counter that skips over string literals; each object
//! slice is then handed to `serde_json` as soon as it closes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::dataset::format_number;
use super::{Cell, CodecError, Dataset};

/// Wire-encoded rows, carried verbatim inside JSON request bodies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WirePayload(pub String);

impl WirePayload {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<String> for WirePayload {
    fn from(s: String) -> Self {
        WirePayload(s)
    }
}

impl From<&str> for WirePayload {
    fn from(s: &str) -> Self {
        WirePayload(s.to_owned())
    }
}

fn push_json_string(out: &mut String, s: &str) {
    // serde_json never fails on a str
    out.push_str(&serde_json::to_string(s).expect("string serialization"));
}

/// Rows in order, keys in column order, numbers in shortest round-trip form.
pub fn encode_wire(d: &Dataset) -> WirePayload {
    let mut out = String::new();
    for (r, row) in d.rows().iter().enumerate() {
        if r > 0 {
            out.push(',');
        }
        out.push('{');
        for (c, (name, cell)) in d.columns().iter().zip(row).enumerate() {
            if c > 0 {
                out.push(',');
            }
            push_json_string(&mut out, name);
            out.push(':');
            match cell {
                Cell::Number(v) => {
                    let _ = write!(out, "{}", format_number(*v));
                }
                Cell::Text(s) => push_json_string(&mut out, s),
            }
        }
        out.push('}');
    }
    WirePayload(out)
}

#[derive(PartialEq)]
enum Expect {
    Object,
    SeparatorOrEnd,
}

fn syntax(offset: usize, message: impl Into<String>) -> CodecError {
    CodecError::WireSyntax {
        offset,
        message: message.into(),
    }
}

/// Inverse of [`encode_wire`]. Every object must carry the same key set;
/// the first object fixes the column order.
pub fn decode_wire(p: &WirePayload) -> Result<Dataset, CodecError> {
    let text = p.as_str();
    let bytes = text.as_bytes();

    let mut columns: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<Cell>> = Vec::new();

    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    let mut start = 0usize;
    let mut expect = Expect::Object;

    for (i, &b) in bytes.iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' if depth > 0 => in_string = true,
            b'{' | b'[' => {
                if depth == 0 {
                    if b == b'[' || expect != Expect::Object {
                        return Err(syntax(i, "expected a ',' between row objects"));
                    }
                    start = i;
                }
                depth += 1;
            }
            b'}' | b']' => {
                if depth == 0 {
                    return Err(syntax(i, "unbalanced closing bracket"));
                }
                depth -= 1;
                if depth == 0 {
                    if b != b'}' {
                        return Err(syntax(i, "row must be a JSON object"));
                    }
                    let row = decode_object(&text[start..=i], start, rows.len(), &mut columns)?;
                    rows.push(row);
                    expect = Expect::SeparatorOrEnd;
                }
            }
            b',' if depth == 0 => {
                if expect != Expect::SeparatorOrEnd {
                    return Err(syntax(i, "separator without a preceding row object"));
                }
                expect = Expect::Object;
            }
            b' ' | b'\t' | b'\n' | b'\r' if depth == 0 => {}
            _ if depth == 0 => return Err(syntax(i, "unexpected character between rows")),
            _ => {}
        }
    }

    if in_string || depth != 0 {
        return Err(syntax(bytes.len(), "unterminated row object"));
    }
    let Some(columns) = columns else {
        return Err(CodecError::Empty("wire payload holds no rows".into()));
    };
    if expect == Expect::Object {
        return Err(syntax(bytes.len(), "trailing separator"));
    }
    Dataset::new(columns, rows)
}

fn decode_object(
    slice: &str,
    offset: usize,
    row: usize,
    columns: &mut Option<Vec<String>>,
) -> Result<Vec<Cell>, CodecError> {
    let map: Map<String, Value> =
        serde_json::from_str(slice).map_err(|e| syntax(offset, e.to_string()))?;

    let cols = columns.get_or_insert_with(|| map.keys().cloned().collect());
    if map.len() != cols.len() {
        return Err(CodecError::KeyMismatch { row });
    }
    let mut cells = Vec::with_capacity(cols.len());
    for name in cols.iter() {
        let value = map.get(name).ok_or(CodecError::KeyMismatch { row })?;
        let cell = match value {
            Value::Number(n) => Cell::Number(
                n.as_f64()
                    .ok_or_else(|| syntax(offset, format!("number out of range for {name:?}")))?,
            ),
            Value::String(s) => Cell::Text(s.clone()),
            _ => {
                return Err(syntax(
                    offset,
                    format!("value for {name:?} must be a number or string"),
                ))
            }
        };
        cells.push(cell);
    }
    Ok(cells)
}
