//! Analysis core for vanlearn: dense tensors, the four learners, the tabular
//! codecs and the upload validator.
//!
//! The numeric code is generic over [`Scalar`]; the aliases below fix it to
//! `f64`, which is what the service and benchmark use.

pub mod codec;
pub mod ml;
pub mod scalar;
pub mod tensor;
pub mod validator;

pub use codec::{decode_wire, encode_wire, export, parse_csv, Cell, CodecError, Dataset, ExportFormat, WirePayload};
pub use ml::{MlError, StepMode};
pub use scalar::Scalar;
pub use tensor::{DenseMatrix, DenseVector, TensorError};
pub use validator::{
    screen, validate_schema, validate_size, Algorithm, SchemaRequirement, ValidationReport, ValidationRules, Violation,
    ViolationCode,
};

pub type Matrix = DenseMatrix<f64>;
pub type Vector = DenseVector<f64>;
pub type MatrixF32 = DenseMatrix<f32>;
pub type VectorF32 = DenseVector<f32>;

pub type KMeansConfig = ml::KMeansConfig<f64>;
pub type KMeansModel = ml::KMeansModel<f64>;
pub type GdConfig = ml::GdConfig<f64>;
pub type LinearModel = ml::LinearModel<f64>;
pub type LogisticModel = ml::LogisticModel<f64>;
pub type TreeModel = ml::TreeModel<f64>;
pub type TreeNode = ml::TreeNode<f64>;
pub type TrainedModel = ml::TrainedModel<f64>;
