//! Size and schema gatekeeping applied before any data reaches a learner.
//!
//! Reports are plain data so a caller can show every problem at once. The
//! violation codes are a stable contract shared with the browser client.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{Cell, Dataset};

/// Non-numeric cells reported individually before the rest are summarized.
pub const MAX_REPORTED_CELLS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationCode {
    #[serde(rename = "V_BYTES")]
    Bytes,
    #[serde(rename = "V_ROWS")]
    Rows,
    #[serde(rename = "V_COLS")]
    Cols,
    #[serde(rename = "V_NON_NUMERIC")]
    NonNumeric,
    #[serde(rename = "V_TARGET_RANGE")]
    TargetRange,
    #[serde(rename = "V_LABEL_CARDINALITY")]
    LabelCardinality,
    #[serde(rename = "V_TOO_FEW_ROWS")]
    TooFewRows,
    #[serde(rename = "V_TOO_FEW_COLS")]
    TooFewCols,
}

impl ViolationCode {
    pub const ALL: [ViolationCode; 8] = [
        ViolationCode::Bytes,
        ViolationCode::Rows,
        ViolationCode::Cols,
        ViolationCode::NonNumeric,
        ViolationCode::TargetRange,
        ViolationCode::LabelCardinality,
        ViolationCode::TooFewRows,
        ViolationCode::TooFewCols,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::Bytes => "V_BYTES",
            ViolationCode::Rows => "V_ROWS",
            ViolationCode::Cols => "V_COLS",
            ViolationCode::NonNumeric => "V_NON_NUMERIC",
            ViolationCode::TargetRange => "V_TARGET_RANGE",
            ViolationCode::LabelCardinality => "V_LABEL_CARDINALITY",
            ViolationCode::TooFewRows => "V_TOO_FEW_ROWS",
            ViolationCode::TooFewCols => "V_TOO_FEW_COLS",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One problem found in the data. `row` and `col` are 0-based, with rows
/// counted after the header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub row: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub col: Option<usize>,
}

impl Violation {
    fn new(code: ViolationCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            row: None,
            col: None,
        }
    }

    fn at(mut self, row: Option<usize>, col: Option<usize>) -> Self {
        self.row = row;
        self.col = col;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            ok: violations.is_empty(),
            violations,
        }
    }

    pub fn codes(&self) -> BTreeSet<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn merge(mut self, other: ValidationReport) -> Self {
        self.violations.extend(other.violations);
        self.ok = self.violations.is_empty();
        self
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid validation setting: {0}")]
pub struct RuleError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationRules {
    pub max_bytes: usize,
    pub max_rows: usize,
    pub max_cols: usize,
}

impl Default for ValidationRules {
    fn default() -> Self {
        Self {
            max_bytes: 2_097_152,
            max_rows: 10_000,
            max_cols: 100,
        }
    }
}

impl ValidationRules {
    pub fn new(max_bytes: usize, max_rows: usize, max_cols: usize) -> Result<Self, RuleError> {
        let rules = Self {
            max_bytes,
            max_rows,
            max_cols,
        };
        rules.check()?;
        Ok(rules)
    }

    pub fn check(&self) -> Result<(), RuleError> {
        if self.max_bytes == 0 || self.max_rows == 0 || self.max_cols == 0 {
            return Err(RuleError("all limits must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Kmeans,
    Linreg,
    Logreg,
    Dtree,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Kmeans, Algorithm::Linreg, Algorithm::Logreg, Algorithm::Dtree];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Kmeans => "kmeans",
            Algorithm::Linreg => "linreg",
            Algorithm::Logreg => "logreg",
            Algorithm::Dtree => "dtree",
        }
    }

    pub fn is_supervised(self) -> bool {
        !matches!(self, Algorithm::Kmeans)
    }

    /// Number of values the user supplies: k, the target column, or nothing.
    pub fn parameter_count(self) -> usize {
        match self {
            Algorithm::Dtree => 0,
            _ => 1,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown algorithm {0:?} (expected kmeans, linreg, logreg or dtree)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" => Ok(Algorithm::Kmeans),
            "linreg" | "linear" => Ok(Algorithm::Linreg),
            "logreg" | "logistic" => Ok(Algorithm::Logreg),
            "dtree" | "tree" | "decision-tree" => Ok(Algorithm::Dtree),
            _ => Err(UnknownAlgorithm(s.to_owned())),
        }
    }
}

/// What an algorithm needs from a dataset. Regression requires a target
/// column; the tree always predicts the last column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaRequirement {
    pub algorithm: Algorithm,
    pub target_column: Option<usize>,
}

impl SchemaRequirement {
    pub fn kmeans() -> Self {
        Self {
            algorithm: Algorithm::Kmeans,
            target_column: None,
        }
    }

    pub fn linreg(target_column: usize) -> Self {
        Self {
            algorithm: Algorithm::Linreg,
            target_column: Some(target_column),
        }
    }

    pub fn logreg(target_column: usize) -> Self {
        Self {
            algorithm: Algorithm::Logreg,
            target_column: Some(target_column),
        }
    }

    pub fn dtree() -> Self {
        Self {
            algorithm: Algorithm::Dtree,
            target_column: None,
        }
    }

    /// Checked constructor: the target must be given exactly for the
    /// regressions.
    pub fn new(algorithm: Algorithm, target_column: Option<usize>) -> Result<Self, RuleError> {
        match (algorithm, target_column) {
            (Algorithm::Linreg | Algorithm::Logreg, None) => {
                Err(RuleError(format!("{algorithm} requires a target column")))
            }
            (Algorithm::Kmeans | Algorithm::Dtree, Some(_)) => {
                Err(RuleError(format!("{algorithm} takes no target column")))
            }
            _ => Ok(Self {
                algorithm,
                target_column,
            }),
        }
    }

    /// Columns fed to the learner as features.
    pub fn feature_columns(&self, n_cols: usize) -> Vec<usize> {
        match self.algorithm {
            Algorithm::Kmeans => (0..n_cols).collect(),
            Algorithm::Dtree => (0..n_cols.saturating_sub(1)).collect(),
            Algorithm::Linreg | Algorithm::Logreg => {
                (0..n_cols).filter(|&c| Some(c) != self.target_column).collect()
            }
        }
    }

    /// The predicted column, if any.
    pub fn target(&self, n_cols: usize) -> Option<usize> {
        match self.algorithm {
            Algorithm::Kmeans => None,
            Algorithm::Dtree => n_cols.checked_sub(1),
            Algorithm::Linreg | Algorithm::Logreg => self.target_column,
        }
    }
}

pub fn validate_size(byte_len: usize, rows: usize, cols: usize, rules: &ValidationRules) -> ValidationReport {
    let mut v = Vec::new();
    if byte_len > rules.max_bytes {
        v.push(Violation::new(
            ViolationCode::Bytes,
            format!("file is {byte_len} bytes; the limit is {}", rules.max_bytes),
        ));
    }
    if rows > rules.max_rows {
        v.push(Violation::new(
            ViolationCode::Rows,
            format!("{rows} data rows; the limit is {}", rules.max_rows),
        ));
    }
    if cols > rules.max_cols {
        v.push(Violation::new(
            ViolationCode::Cols,
            format!("{cols} columns; the limit is {}", rules.max_cols),
        ));
    }
    ValidationReport::from_violations(v)
}

/// Flags every non-numeric cell in the listed columns, reporting at most
/// [`MAX_REPORTED_CELLS`] individually and summarizing the rest.
pub fn check_numeric_columns(d: &Dataset, cols: &[usize]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut extra = 0usize;
    for (r, row) in d.rows().iter().enumerate() {
        for &c in cols {
            if let Some(Cell::Text(t)) = row.get(c) {
                if out.len() < MAX_REPORTED_CELLS {
                    let what = if t.is_empty() {
                        "empty cell".to_owned()
                    } else {
                        format!("non-numeric value {t:?}")
                    };
                    out.push(
                        Violation::new(
                            ViolationCode::NonNumeric,
                            format!("{what} in column {:?}, data row {}", d.columns()[c], r + 1),
                        )
                        .at(Some(r), Some(c)),
                    );
                } else {
                    extra += 1;
                }
            }
        }
    }
    if extra > 0 {
        out.push(Violation::new(
            ViolationCode::NonNumeric,
            format!("{extra} more non-numeric cells not listed"),
        ));
    }
    out
}

pub fn validate_schema(d: &Dataset, req: &SchemaRequirement) -> ValidationReport {
    let n_cols = d.n_cols();
    let n_rows = d.n_rows();
    let mut v = Vec::new();

    let min_rows = match req.algorithm {
        Algorithm::Kmeans | Algorithm::Dtree => 1,
        Algorithm::Linreg | Algorithm::Logreg => 2,
    };
    let min_cols = match req.algorithm {
        Algorithm::Kmeans => 1,
        _ => 2,
    };
    if n_cols < min_cols {
        v.push(Violation::new(
            ViolationCode::TooFewCols,
            format!("{} needs at least {min_cols} columns, found {n_cols}", req.algorithm),
        ));
    }
    if n_rows < min_rows {
        v.push(Violation::new(
            ViolationCode::TooFewRows,
            format!("{} needs at least {min_rows} data rows, found {n_rows}", req.algorithm),
        ));
    }

    let numeric_cols: Vec<usize> = match req.algorithm {
        Algorithm::Dtree => (0..n_cols.saturating_sub(1)).collect(),
        _ => (0..n_cols).collect(),
    };

    if matches!(req.algorithm, Algorithm::Linreg | Algorithm::Logreg) {
        match req.target_column {
            Some(t) if t < n_cols => {
                if req.algorithm == Algorithm::Logreg {
                    let distinct: BTreeSet<String> = d.column_cells(t).map(ToString::to_string).collect();
                    if distinct.len() != 2 {
                        v.push(
                            Violation::new(
                                ViolationCode::LabelCardinality,
                                format!(
                                    "target column {:?} has {} distinct values; logistic regression needs exactly 2",
                                    d.columns()[t],
                                    distinct.len()
                                ),
                            )
                            .at(None, Some(t)),
                        );
                    }
                }
            }
            Some(t) => v.push(
                Violation::new(
                    ViolationCode::TargetRange,
                    format!("target column {t} is out of range for {n_cols} columns"),
                )
                .at(None, Some(t)),
            ),
            None => v.push(Violation::new(
                ViolationCode::TargetRange,
                "no target column selected",
            )),
        }
    }

    v.extend(check_numeric_columns(d, &numeric_cols));
    ValidationReport::from_violations(v)
}

/// Everything checked before an analysis runs: the size limits against
/// the raw upload, then the schema rules for the chosen algorithm.
pub fn screen(byte_len: usize, d: &Dataset, req: &SchemaRequirement, rules: &ValidationRules) -> ValidationReport {
    validate_size(byte_len, d.n_rows(), d.n_cols(), rules).merge(validate_schema(d, req))
}
