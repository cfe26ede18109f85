//! The four learners: k-means, linear regression, logistic regression and
//! a CART decision tree, with their predictors.

pub mod gd;
mod kmeans;
mod linear;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::CodecError;
use crate::scalar::Scalar;
use crate::tensor::TensorError;

pub use gd::{GdConfig, GdTrace, StepMode};
pub use kmeans::{kmeans_fit, KMeansConfig, KMeansModel};
pub use linear::{
    linreg_fit, linreg_fit_traced, linreg_predict, logreg_fit, logreg_fit_traced, logreg_predict,
    LinearModel, LogisticModel,
};
pub use tree::{dtree_fit, dtree_predict, fit_tree, TreeModel, TreeNode, MIN_SPLIT_GAIN};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlError {
    #[error("E_TOO_FEW_ROWS: {rows} rows, need at least {required}")]
    TooFewRows { rows: usize, required: usize },
    #[error("E_SHAPE: {0}")]
    Shape(String),
    #[error("E_DEGENERATE: {0}")]
    Degenerate(String),
    #[error("E_LABEL_CARDINALITY: expected exactly 2 distinct labels, found {found}")]
    LabelCardinality { found: usize },
    #[error("E_SCHEMA: {0}")]
    Schema(String),
    #[error("E_EMPTY: {0}")]
    Empty(String),
    #[error("E_CONFIG: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

impl MlError {
    pub fn code(&self) -> &'static str {
        match self {
            MlError::TooFewRows { .. } => "E_TOO_FEW_ROWS",
            MlError::Shape(_) => "E_SHAPE",
            MlError::Degenerate(_) => "E_DEGENERATE",
            MlError::LabelCardinality { .. } => "E_LABEL_CARDINALITY",
            MlError::Schema(_) => "E_SCHEMA",
            MlError::Empty(_) => "E_EMPTY",
            MlError::InvalidConfig(_) => "E_CONFIG",
            MlError::Tensor(e) => e.code(),
        }
    }
}

impl From<CodecError> for MlError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Schema { .. } => MlError::Schema(e.to_string()),
            CodecError::Tensor(t) => MlError::Tensor(t),
            other => MlError::Shape(other.to_string()),
        }
    }
}

/// Any fitted model, tagged by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
pub enum TrainedModel<T: Scalar> {
    Kmeans(KMeansModel<T>),
    Linear(LinearModel<T>),
    Logistic(LogisticModel<T>),
    Tree(TreeModel<T>),
}

impl<T: Scalar> TrainedModel<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::Kmeans(_) => "kmeans",
            TrainedModel::Linear(_) => "linear",
            TrainedModel::Logistic(_) => "logistic",
            TrainedModel::Tree(_) => "tree",
        }
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ModelDocument<T: Scalar> {
    version: u32,
    model: TrainedModel<T>,
}

#[derive(Debug, Error)]
pub enum ModelFormatError {
    #[error("unsupported model document version {0}")]
    Version(u32),
    #[error("malformed model document: {0}")]
    Json(#[from] serde_json::Error),
}

/// Versioned JSON document for storage.
pub fn model_to_json<T: Scalar>(model: &TrainedModel<T>) -> String {
    let doc = ModelDocument {
        version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    serde_json::to_string(&doc).expect("models serialize to JSON")
}

pub fn model_from_json<T: Scalar>(text: &str) -> Result<TrainedModel<T>, ModelFormatError> {
    #[derive(Deserialize)]
    struct Header {
        version: u32,
    }
    let header: Header = serde_json::from_str(text)?;
    if header.version != MODEL_FORMAT_VERSION {
        return Err(ModelFormatError::Version(header.version));
    }
    let doc: ModelDocument<T> = serde_json::from_str(text)?;
    Ok(doc.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::DenseMatrix;

    #[test]
    fn model_document_round_trip_and_version_check() {
        let x = DenseMatrix::from_rows(&[[0.0], [1.0], [5.0], [6.0]]).unwrap();
        let model = TrainedModel::Kmeans(kmeans_fit(&x, &KMeansConfig::new(2)).unwrap());
        let json = model_to_json(&model);
        assert!(json.starts_with(r#"{"version":1,"model":{"kind":"kmeans""#));
        assert_eq!(model_from_json::<f64>(&json).unwrap(), model);

        let bumped = json.replacen("\"version\":1", "\"version\":9", 1);
        assert!(matches!(model_from_json::<f64>(&bumped), Err(ModelFormatError::Version(9))));
    }

    #[test]
    fn tree_serializes_with_node_tags() {
        let x = DenseMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let model = TrainedModel::Tree(fit_tree(&x, &["a", "b"], None).unwrap());
        let json = model_to_json(&model);
        assert!(json.contains(r#""node":"split""#));
        assert_eq!(model_from_json::<f64>(&json).unwrap(), model);
    }
}
