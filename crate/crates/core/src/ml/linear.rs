//! Linear and logistic regression fitted by gradient descent.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::gd::{descend, sigmoid, CrossEntropy, GdConfig, GdTrace, SquaredError, Standardization};
use super::MlError;
use crate::scalar::Scalar;
use crate::tensor::{dot, DenseMatrix, DenseVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearModel<T: Scalar> {
    /// Raw-scale weights, one per feature column.
    pub weights: DenseVector<T>,
    pub intercept: T,
    pub standardization: Standardization<T>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LogisticModel<T: Scalar> {
    pub weights: DenseVector<T>,
    pub intercept: T,
    /// `label_map[0]` is encoded as 0, `label_map[1]` as 1.
    pub label_map: [String; 2],
    pub standardization: Standardization<T>,
    pub iterations: usize,
    pub converged: bool,
}

fn check_rows<T: Scalar>(x: &DenseMatrix<T>, n_targets: usize) -> Result<(), MlError> {
    if x.rows() != n_targets {
        return Err(MlError::Shape(format!(
            "{} feature rows but {} targets",
            x.rows(),
            n_targets
        )));
    }
    if x.rows() < 2 {
        return Err(MlError::TooFewRows {
            rows: x.rows(),
            required: 2,
        });
    }
    Ok(())
}

fn check_width(expected: usize, x_cols: usize) -> Result<(), MlError> {
    if x_cols != expected {
        return Err(MlError::Shape(format!(
            "model has {expected} features, input has {x_cols} columns"
        )));
    }
    Ok(())
}

/// Least-squares fit, returning the model plus the descent trace.
pub fn linreg_fit_traced<T: Scalar>(
    x: &DenseMatrix<T>,
    y: &DenseVector<T>,
    cfg: &GdConfig<T>,
) -> Result<(LinearModel<T>, GdTrace<T>), MlError> {
    cfg.validate()?;
    check_rows(x, y.len())?;
    let standardization = Standardization::fit(x)?;
    if standardization.all_constant() {
        return Err(MlError::Degenerate("all feature rows are identical".into()));
    }
    let z = standardization.transform(x)?;
    let objective = SquaredError {
        features: &z,
        targets: y.as_slice(),
    };
    let (params, trace) = descend(&objective, cfg);
    let d = x.cols();
    let (weights, intercept) = standardization.destandardize(&params[..d], params[d]);
    let model = LinearModel {
        weights: DenseVector::new(weights)?,
        intercept,
        standardization,
        iterations: trace.iterations,
        converged: trace.converged,
    };
    Ok((model, trace))
}

/// Minimizes mean squared error over internally standardized features.
pub fn linreg_fit<T: Scalar>(
    x: &DenseMatrix<T>,
    y: &DenseVector<T>,
    cfg: &GdConfig<T>,
) -> Result<LinearModel<T>, MlError> {
    linreg_fit_traced(x, y, cfg).map(|(m, _)| m)
}

pub fn linreg_predict<T: Scalar>(model: &LinearModel<T>, x: &DenseMatrix<T>) -> Result<DenseVector<T>, MlError> {
    check_width(model.weights.len(), x.cols())?;
    let w = model.weights.as_slice();
    let out = x.row_iter().map(|r| dot(r, w) + model.intercept).collect();
    Ok(DenseVector::new(out)?)
}

/// Fits a binary classifier. The lexicographically smaller label maps to 0.
pub fn logreg_fit_traced<T: Scalar, L: AsRef<str>>(
    x: &DenseMatrix<T>,
    labels: &[L],
    cfg: &GdConfig<T>,
) -> Result<(LogisticModel<T>, GdTrace<T>), MlError> {
    cfg.validate()?;
    let distinct: BTreeSet<&str> = labels.iter().map(AsRef::as_ref).collect();
    if distinct.len() != 2 {
        return Err(MlError::LabelCardinality { found: distinct.len() });
    }
    check_rows(x, labels.len())?;
    let mut it = distinct.into_iter();
    let label_map = [
        it.next().expect("two labels").to_owned(),
        it.next().expect("two labels").to_owned(),
    ];
    let targets: Vec<T> = labels
        .iter()
        .map(|l| if l.as_ref() == label_map[1] { T::one() } else { T::zero() })
        .collect();

    let standardization = Standardization::fit(x)?;
    let z = standardization.transform(x)?;
    let objective = CrossEntropy {
        features: &z,
        targets: &targets,
    };
    let (params, trace) = descend(&objective, cfg);
    let d = x.cols();
    let (weights, intercept) = standardization.destandardize(&params[..d], params[d]);
    let model = LogisticModel {
        weights: DenseVector::new(weights)?,
        intercept,
        label_map,
        standardization,
        iterations: trace.iterations,
        converged: trace.converged,
    };
    Ok((model, trace))
}

/// Gradient descent on mean cross-entropy with a sigmoid link.
pub fn logreg_fit<T: Scalar, L: AsRef<str>>(
    x: &DenseMatrix<T>,
    labels: &[L],
    cfg: &GdConfig<T>,
) -> Result<LogisticModel<T>, MlError> {
    logreg_fit_traced(x, labels, cfg).map(|(m, _)| m)
}

/// Class labels and the probability of the class mapped to 1. Probability
/// 0.5 exactly goes to the class mapped to 1. Probabilities are kept
/// strictly inside (0, 1).
pub fn logreg_predict<T: Scalar>(
    model: &LogisticModel<T>,
    x: &DenseMatrix<T>,
) -> Result<(Vec<String>, DenseVector<T>), MlError> {
    check_width(model.weights.len(), x.cols())?;
    let w = model.weights.as_slice();
    let lo = T::min_positive_value();
    let hi = T::one() - T::epsilon();
    let half = T::of(0.5);
    let mut labels = Vec::with_capacity(x.rows());
    let mut probs = Vec::with_capacity(x.rows());
    for row in x.row_iter() {
        let p = sigmoid(dot(row, w) + model.intercept).max(lo).min(hi);
        labels.push(model.label_map[usize::from(p >= half)].clone());
        probs.push(p);
    }
    Ok((labels, DenseVector::new(probs)?))
}
