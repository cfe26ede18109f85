//! The synchronous part of train and predict: turning a validated dataset
//! into a fitted model, a result table and a JSON summary.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use vanlearn_core::ml::{
    self, dtree_fit, dtree_predict, kmeans_fit, linreg_fit, linreg_predict, logreg_fit, logreg_predict, MlError,
};
use vanlearn_core::validator::check_numeric_columns;
use vanlearn_core::{
    Algorithm, Cell, Dataset, GdConfig, KMeansConfig, SchemaRequirement, TrainedModel, ValidationReport, Vector,
};

use crate::error::ApiError;

/// A column given by position or by header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// The single user parameter each algorithm takes, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Params {
    K(usize),
    Target(ColumnRef),
    None,
}

impl Params {
    /// Checks that `raw` holds exactly the keys `algorithm` expects.
    pub fn parse(algorithm: Algorithm, raw: &Map<String, Value>) -> Result<Self, ApiError> {
        let expected: &[&str] = match algorithm {
            Algorithm::Kmeans => &["k"],
            Algorithm::Linreg | Algorithm::Logreg => &["target_column"],
            Algorithm::Dtree => &[],
        };
        let mut keys: Vec<&str> = raw.keys().map(String::as_str).collect();
        keys.sort_unstable();
        if keys != expected {
            return Err(ApiError::bad_request(
                "E_PARAMS",
                format!("{algorithm} takes parameters {expected:?}, got {keys:?}"),
            ));
        }
        match algorithm {
            Algorithm::Kmeans => match raw["k"].as_u64() {
                Some(k) if k >= 1 => Ok(Params::K(k as usize)),
                _ => Err(ApiError::bad_request("E_PARAMS", "k must be a positive integer")),
            },
            Algorithm::Linreg | Algorithm::Logreg => serde_json::from_value(raw["target_column"].clone())
                .map(Params::Target)
                .map_err(|_| {
                    ApiError::bad_request("E_PARAMS", "target_column must be a column index or column name")
                }),
            Algorithm::Dtree => Ok(Params::None),
        }
    }

    /// Resolves against a dataset's header. An unknown name becomes an
    /// out-of-range index so validation reports it.
    pub fn requirement(&self, algorithm: Algorithm, d: &Dataset) -> SchemaRequirement {
        let target = match self {
            Params::Target(ColumnRef::Index(i)) => Some(*i),
            Params::Target(ColumnRef::Name(n)) => Some(d.column_index(n).unwrap_or(d.n_cols())),
            Params::K(_) | Params::None => None,
        };
        SchemaRequirement {
            algorithm,
            target_column: target,
        }
    }
}

/// What is stored next to a result so it can predict later.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelRecord {
    pub features: Vec<String>,
    pub target: Option<String>,
    /// The versioned model document.
    pub model: Value,
}

impl ModelRecord {
    fn new(features: Vec<String>, target: Option<String>, model: &TrainedModel) -> Self {
        let doc = ml::model_to_json(model);
        Self {
            features,
            target,
            model: serde_json::from_str(&doc).expect("model document is JSON"),
        }
    }

    pub fn decode(&self) -> Result<TrainedModel, ApiError> {
        ml::model_from_json(&self.model.to_string()).map_err(|e| ApiError::internal(format!("stored model: {e}")))
    }
}

pub struct Outcome {
    pub output: Dataset,
    pub summary: Value,
    pub record: ModelRecord,
}

fn names(d: &Dataset, cols: &[usize]) -> Vec<String> {
    cols.iter().map(|&c| d.columns()[c].clone()).collect()
}

fn labels(d: &Dataset, col: usize) -> Vec<String> {
    d.column_cells(col).map(ToString::to_string).collect()
}

fn accuracy(predicted: &[String], actual: &[String]) -> f64 {
    let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    hits as f64 / actual.len().max(1) as f64
}

fn coefficient_table(features: &[String], weights: &[f64], intercept: f64) -> Result<Dataset, MlError> {
    let mut rows: Vec<Vec<Cell>> = features
        .iter()
        .zip(weights)
        .map(|(f, w)| vec![Cell::Text(f.clone()), Cell::Number(*w)])
        .collect();
    rows.push(vec![Cell::Text("(intercept)".into()), Cell::Number(intercept)]);
    Ok(Dataset::new(vec!["term".into(), "coefficient".into()], rows)?)
}

fn coefficients_json(features: &[String], weights: &[f64]) -> Value {
    Value::Array(
        features
            .iter()
            .zip(weights)
            .map(|(f, w)| json!({"column": f, "weight": w}))
            .collect(),
    )
}

/// Fits `req.algorithm` on a dataset that already passed validation.
pub fn train(d: &Dataset, req: &SchemaRequirement, params: &Params) -> Result<Outcome, MlError> {
    let features = req.feature_columns(d.n_cols());
    let feature_names = names(d, &features);
    let x = d.to_matrix::<f64>(&features)?;
    match req.algorithm {
        Algorithm::Kmeans => {
            let k = match params {
                Params::K(k) => *k,
                _ => return Err(MlError::InvalidConfig("k-means needs k".into())),
            };
            let model = kmeans_fit(&x, &KMeansConfig::new(k))?;
            let clusters = model.assignments.iter().map(|&a| Cell::Number(a as f64)).collect();
            let output = d.with_column("cluster", clusters)?;
            let centroids: Vec<Vec<f64>> = model.centroids.row_iter().map(<[f64]>::to_vec).collect();
            let summary = json!({
                "k": k,
                "inertia": model.inertia,
                "iterations": model.iterations_run,
                "cluster_sizes": model.cluster_sizes(),
                "centroids": centroids,
                "assignments": model.assignments,
            });
            let record = ModelRecord::new(feature_names, None, &TrainedModel::Kmeans(model));
            Ok(Outcome { output, summary, record })
        }
        Algorithm::Linreg => {
            let t = req.target_column.ok_or_else(|| MlError::Schema("no target column".into()))?;
            let y: Vec<f64> = d
                .column_cells(t)
                .map(|c| c.as_number().ok_or_else(|| MlError::Schema("target must be numeric".into())))
                .collect::<Result<_, _>>()?;
            let y = Vector::new(y)?;
            let model = linreg_fit(&x, &y, &GdConfig::default())?;
            let fitted = linreg_predict(&model, &x)?;
            let mse = fitted.iter().zip(y.iter()).map(|(p, a)| (p - a).powi(2)).sum::<f64>() / y.len() as f64;
            let output = coefficient_table(&feature_names, model.weights.as_slice(), model.intercept)?;
            let summary = json!({
                "target": d.columns()[t],
                "coefficients": coefficients_json(&feature_names, model.weights.as_slice()),
                "intercept": model.intercept,
                "training_mse": mse,
                "iterations": model.iterations,
                "converged": model.converged,
            });
            let target = Some(d.columns()[t].clone());
            let record = ModelRecord::new(feature_names, target, &TrainedModel::Linear(model));
            Ok(Outcome { output, summary, record })
        }
        Algorithm::Logreg => {
            let t = req.target_column.ok_or_else(|| MlError::Schema("no target column".into()))?;
            let y = labels(d, t);
            let model = logreg_fit(&x, &y, &GdConfig::default())?;
            let (predicted, _) = logreg_predict(&model, &x)?;
            let output = coefficient_table(&feature_names, model.weights.as_slice(), model.intercept)?;
            let summary = json!({
                "target": d.columns()[t],
                "coefficients": coefficients_json(&feature_names, model.weights.as_slice()),
                "intercept": model.intercept,
                "label_map": model.label_map,
                "training_accuracy": accuracy(&predicted, &y),
                "iterations": model.iterations,
                "converged": model.converged,
            });
            let target = Some(d.columns()[t].clone());
            let record = ModelRecord::new(feature_names, target, &TrainedModel::Logistic(model));
            Ok(Outcome { output, summary, record })
        }
        Algorithm::Dtree => {
            let t = d.n_cols() - 1;
            let model = dtree_fit::<f64>(d, None)?;
            let y = labels(d, t);
            let predicted = dtree_predict(&model, &x)?;
            let rows = model
                .rules(&feature_names)
                .into_iter()
                .map(|(rule, class, count)| vec![Cell::Text(rule), Cell::Text(class), Cell::Number(count as f64)])
                .collect();
            let output = Dataset::new(vec!["rule".into(), "class".into(), "count".into()], rows)?;
            let summary = json!({
                "target": d.columns()[t],
                "depth": model.depth(),
                "leaves": model.n_leaves(),
                "classes": model.class_labels,
                "training_accuracy": accuracy(&predicted, &y),
            });
            let target = Some(d.columns()[t].clone());
            let record = ModelRecord::new(feature_names, target, &TrainedModel::Tree(model));
            Ok(Outcome { output, summary, record })
        }
    }
}

/// Columns of `d` to feed the model: either exactly the trained feature
/// count, or that plus the training target column, which is skipped.
fn predict_columns(record: &ModelRecord, d: &Dataset) -> Result<(Vec<usize>, Option<usize>), ApiError> {
    let n = record.features.len();
    if d.n_cols() == n {
        return Ok(((0..n).collect(), None));
    }
    let target = record.target.as_deref().and_then(|t| d.column_index(t));
    match target {
        Some(t) if d.n_cols() == n + 1 => Ok(((0..d.n_cols()).filter(|&c| c != t).collect(), Some(t))),
        _ => Err(ApiError::from(MlError::Shape(format!(
            "model expects {n} feature columns{}, input has {}",
            record
                .target
                .as_deref()
                .map(|t| format!(" (optionally plus {t:?})"))
                .unwrap_or_default(),
            d.n_cols()
        )))),
    }
}

/// Runs a stored supervised model over new rows and appends a
/// "prediction" column.
pub fn predict(record: &ModelRecord, d: &Dataset) -> Result<Outcome, ApiError> {
    let model = record.decode()?;
    if let TrainedModel::Kmeans(_) = model {
        return Err(ApiError::bad_request(
            "E_UNSUPPORTED",
            "k-means results have no prediction step",
        ));
    }
    let (cols, target) = predict_columns(record, d)?;
    let bad = check_numeric_columns(d, &cols);
    if !bad.is_empty() {
        return Err(ApiError::rejected(ValidationReport::from_violations(bad)));
    }
    let x = d.to_matrix::<f64>(&cols).map_err(MlError::from)?;
    let actual = target.map(|t| labels(d, t));
    let (cells, mut summary): (Vec<Cell>, Value) = match &model {
        TrainedModel::Linear(m) => {
            let p = linreg_predict(m, &x)?;
            let mse = target.and_then(|t| {
                let ys: Option<Vec<f64>> = d.column_cells(t).map(Cell::as_number).collect();
                ys.map(|ys| p.iter().zip(&ys).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / ys.len().max(1) as f64)
            });
            (p.iter().map(|v| Cell::Number(*v)).collect(), json!({ "mse": mse }))
        }
        TrainedModel::Logistic(m) => {
            let (l, _) = logreg_predict(m, &x)?;
            let acc = actual.as_ref().map(|a| accuracy(&l, a));
            (l.into_iter().map(Cell::Text).collect(), json!({ "accuracy": acc }))
        }
        TrainedModel::Tree(m) => {
            let l = dtree_predict(m, &x)?;
            let acc = actual.as_ref().map(|a| accuracy(&l, a));
            (l.into_iter().map(Cell::Text).collect(), json!({ "accuracy": acc }))
        }
        TrainedModel::Kmeans(_) => unreachable!("rejected above"),
    };
    summary["rows"] = json!(d.n_rows());
    // predicted labels like "1" should read back as numbers in the table
    let cells = cells
        .into_iter()
        .map(|c| match c {
            Cell::Text(s) => Cell::parse(&s),
            n => n,
        })
        .collect();
    let output = d.with_column("prediction", cells).map_err(ApiError::from)?;
    Ok(Outcome {
        output,
        summary,
        record: record.clone(),
    })
}
