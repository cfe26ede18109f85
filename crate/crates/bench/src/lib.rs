//! Benchmark harness for the vanlearn learners: fetches the UCI datasets,
//! generates the linear toy data, times each algorithm and prints the
//! six-column report.

pub mod datasets;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;
use vanlearn_core::codec::ExportFormat;
use vanlearn_core::ml::{dtree_fit, dtree_predict, kmeans_fit, linreg_fit, linreg_predict, logreg_fit, logreg_predict};
use vanlearn_core::{
    export, screen, Algorithm, Cell, CodecError, Dataset, GdConfig, KMeansConfig, MlError, SchemaRequirement,
    ValidationReport, ValidationRules, Vector,
};

use crate::datasets::DatasetSpec;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("E_NETWORK: {0}")]
    Network(String),
    #[error("E_CHECKSUM: {name} fingerprint {actual} does not match {expected}")]
    Checksum {
        name: String,
        expected: String,
        actual: String,
    },
    #[error("E_SHAPE: {0}")]
    Shape(String),
    #[error("E_ARG: {0}")]
    Arg(String),
    #[error("E_IO: {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error("E_INVALID: {}", codes(.0))]
    Invalid(ValidationReport),
}

fn codes(r: &ValidationReport) -> String {
    let codes: Vec<&str> = r.codes().into_iter().map(|c| c.as_str()).collect();
    format!("{} violation(s): {}", r.violations.len(), codes.join(", "))
}

impl BenchError {
    pub fn code(&self) -> &'static str {
        match self {
            BenchError::Network(_) => "E_NETWORK",
            BenchError::Checksum { .. } => "E_CHECKSUM",
            BenchError::Shape(_) => "E_SHAPE",
            BenchError::Arg(_) => "E_ARG",
            BenchError::Io { .. } => "E_IO",
            BenchError::Codec(e) => e.code(),
            BenchError::Ml(e) => e.code(),
            BenchError::Invalid(_) => "E_INVALID",
        }
    }
}

pub const SELF_GENERATED: &str = "self-generated";
pub const SELF_GENERATED_ROWS: usize = 1000;
pub const SELF_GENERATED_NOISE: f64 = 0.5;
pub const SELF_GENERATED_SEED: u64 = 0;
pub const DEFAULT_K: usize = 3;

/// Columns `x` and `y` with x uniform on [0, 10) and y = 2x + 1 plus
/// Gaussian noise.
pub fn generate_linear_data(n: usize, noise_sd: f64, seed: u64) -> Result<Dataset, BenchError> {
    if n < 2 {
        return Err(BenchError::Arg(format!("need at least 2 rows, got {n}")));
    }
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        return Err(BenchError::Arg(format!("noise_sd must be finite and >= 0, got {noise_sd}")));
    }
    let noise = Normal::new(0.0, noise_sd).map_err(|e| BenchError::Arg(format!("noise_sd {noise_sd}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(0.0..10.0);
            let y = 2.0 * x + 1.0 + noise.sample(&mut rng);
            vec![Cell::Number(x), Cell::Number(y)]
        })
        .collect();
    Ok(Dataset::new(vec!["x".into(), "y".into()], rows)?)
}

/// Table caption for each learner.
pub fn module_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Kmeans => "k-means",
        Algorithm::Logreg => "Logistic regression",
        Algorithm::Linreg => "Linear Regression",
        Algorithm::Dtree => "Decision Tree",
    }
}

/// Pointer interactions the UI needs from loaded data to a rendered result.
pub fn click_count(a: Algorithm) -> usize {
    match a {
        Algorithm::Kmeans => 1,
        _ => 5,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub module_name: String,
    pub dataset_name: String,
    pub training_secs: f64,
    /// None for k-means, which has no prediction phase.
    pub test_secs: Option<f64>,
    pub parameter_count: usize,
    pub click_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunParams {
    pub k: Option<usize>,
    /// Column name or 0-based index.
    pub target: Option<String>,
}

fn resolve_target(d: &Dataset, target: Option<&str>) -> Result<usize, BenchError> {
    let Some(t) = target else {
        return d.n_cols().checked_sub(1).ok_or_else(|| BenchError::Arg("dataset has no columns".into()));
    };
    if let Some(i) = d.column_index(t) {
        return Ok(i);
    }
    match t.parse::<usize>() {
        Ok(i) if i < d.n_cols() => Ok(i),
        _ => Err(BenchError::Arg(format!("no column {t:?}"))),
    }
}

fn requirement(d: &Dataset, algo: Algorithm, params: &RunParams) -> Result<SchemaRequirement, BenchError> {
    match algo {
        Algorithm::Kmeans | Algorithm::Dtree if params.target.is_some() => {
            Err(BenchError::Arg(format!("{algo} takes no --target")))
        }
        Algorithm::Linreg | Algorithm::Logreg | Algorithm::Dtree if params.k.is_some() => {
            Err(BenchError::Arg(format!("{algo} takes no --k")))
        }
        Algorithm::Kmeans => Ok(SchemaRequirement::kmeans()),
        Algorithm::Dtree => Ok(SchemaRequirement::dtree()),
        Algorithm::Linreg => Ok(SchemaRequirement::linreg(resolve_target(d, params.target.as_deref())?)),
        Algorithm::Logreg => Ok(SchemaRequirement::logreg(resolve_target(d, params.target.as_deref())?)),
    }
}

/// Validates, then times fit and predict (on the training rows). Only the
/// learner calls sit inside the timed regions.
pub fn run(d: &Dataset, dataset_name: &str, algo: Algorithm, params: &RunParams) -> Result<BenchRow, BenchError> {
    let req = requirement(d, algo, params)?;
    let bytes = export(d, ExportFormat::Csv).len();
    let report = screen(bytes, d, &req, &ValidationRules::default());
    if !report.ok {
        return Err(BenchError::Invalid(report));
    }
    let features = req.feature_columns(d.n_cols());
    let x = d.to_matrix::<f64>(&features)?;
    let (training, test) = match algo {
        Algorithm::Kmeans => {
            let cfg = KMeansConfig::new(params.k.unwrap_or(DEFAULT_K));
            let t = Instant::now();
            kmeans_fit(&x, &cfg)?;
            (t.elapsed(), None)
        }
        Algorithm::Linreg => {
            let target = req.target(d.n_cols()).expect("linreg has a target");
            let y = Vector::new(d.column_cells(target).filter_map(Cell::as_number).collect()).map_err(MlError::from)?;
            let t = Instant::now();
            let model = linreg_fit(&x, &y, &GdConfig::default())?;
            let training = t.elapsed();
            let t = Instant::now();
            linreg_predict(&model, &x)?;
            (training, Some(t.elapsed()))
        }
        Algorithm::Logreg => {
            let target = req.target(d.n_cols()).expect("logreg has a target");
            let labels: Vec<String> = d.column_cells(target).map(ToString::to_string).collect();
            let t = Instant::now();
            let model = logreg_fit(&x, &labels, &GdConfig::default())?;
            let training = t.elapsed();
            let t = Instant::now();
            logreg_predict(&model, &x)?;
            (training, Some(t.elapsed()))
        }
        Algorithm::Dtree => {
            let t = Instant::now();
            let model = dtree_fit::<f64>(d, None)?;
            let training = t.elapsed();
            let t = Instant::now();
            dtree_predict(&model, &x)?;
            (training, Some(t.elapsed()))
        }
    };
    Ok(BenchRow {
        module_name: module_name(algo).to_owned(),
        dataset_name: dataset_name.to_owned(),
        training_secs: training.as_secs_f64(),
        test_secs: test.map(|t| t.as_secs_f64()),
        parameter_count: algo.parameter_count(),
        click_count: click_count(algo),
    })
}

/// Drops a UCI dataset's class column so k-means sees measurements only.
pub fn without_label(d: &Dataset, spec: &DatasetSpec) -> Result<Dataset, BenchError> {
    let keep: Vec<usize> = (0..d.n_cols()).filter(|&c| d.columns()[c] != spec.label_column()).collect();
    let columns = keep.iter().map(|&c| d.columns()[c].clone()).collect();
    let rows = d.rows().iter().map(|r| keep.iter().map(|&c| r[c].clone()).collect()).collect();
    Ok(Dataset::new(columns, rows)?)
}

/// A dataset named on the command line: a UCI name, the generator, or a
/// CSV path.
pub fn resolve_dataset(name: &str, data_dir: &Path, algo: Algorithm) -> Result<(String, Dataset), BenchError> {
    if name.eq_ignore_ascii_case(SELF_GENERATED) {
        let d = generate_linear_data(SELF_GENERATED_ROWS, SELF_GENERATED_NOISE, SELF_GENERATED_SEED)?;
        return Ok(("Self-generated".into(), d));
    }
    if let Some(spec) = datasets::spec(name) {
        let d = datasets::load(&spec, data_dir)?;
        let d = if algo == Algorithm::Kmeans { without_label(&d, &spec)? } else { d };
        return Ok((title(spec.name), d));
    }
    let path = Path::new(name);
    let bytes = std::fs::read(path).map_err(|source| BenchError::Io {
        path: path.to_owned(),
        source,
    })?;
    let label = path.file_stem().map_or_else(|| name.to_owned(), |s| s.to_string_lossy().into_owned());
    Ok((label, vanlearn_core::parse_csv(&bytes)?))
}

fn title(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

/// The four runs of the experiment table, in table order.
pub const TABLE: [(&str, Algorithm); 4] = [
    ("seeds", Algorithm::Kmeans),
    ("haberman", Algorithm::Logreg),
    (SELF_GENERATED, Algorithm::Linreg),
    ("iris", Algorithm::Dtree),
];

pub fn suite(data_dir: &Path) -> Vec<(&'static str, Algorithm, Result<BenchRow, BenchError>)> {
    TABLE
        .iter()
        .map(|&(name, algo)| {
            let row = resolve_dataset(name, data_dir, algo)
                .and_then(|(label, d)| run(&d, &label, algo, &RunParams::default()));
            (name, algo, row)
        })
        .collect()
}

const HEADER: [&str; 6] = ["Module Name", "Dataset", "Training (sec)", "Test (sec)", "Parameters", "Clicks"];

fn cells(r: &BenchRow) -> [String; 6] {
    [
        r.module_name.clone(),
        r.dataset_name.clone(),
        format!("{:.3}", r.training_secs),
        r.test_secs.map_or_else(|| "/".to_owned(), |t| format!("{t:.3}")),
        r.parameter_count.to_string(),
        r.click_count.to_string(),
    ]
}

/// Left-aligned columns separated by two spaces.
pub fn render_text(rows: &[BenchRow]) -> String {
    let body: Vec<[String; 6]> = rows.iter().map(cells).collect();
    let mut widths = HEADER.map(str::len);
    for r in &body {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |cols: &[&str]| {
        let l: Vec<String> = cols.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", l.join("  ").trim_end());
    };
    line(&HEADER);
    for r in &body {
        line(&r.each_ref().map(String::as_str));
    }
    out
}

pub fn render_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("module,dataset,training_secs,test_secs,parameters,clicks\n");
    for r in rows {
        let test = r.test_secs.map_or_else(|| "/".to_owned(), |t| t.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.module_name, r.dataset_name, r.training_secs, test, r.parameter_count, r.click_count
        );
    }
    out
}
