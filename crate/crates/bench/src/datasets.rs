//! The three UCI datasets: where they live, how the raw files become
//! header-bearing CSVs, and how local copies are verified.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use sha2::{Digest, Sha256};
use vanlearn_core::{parse_csv, Dataset};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawFormat {
    /// One record per line, comma separated.
    Comma,
    /// Whitespace separated tokens; records may wrap across lines.
    Whitespace,
}

#[derive(Debug, Clone, Copy)]
pub struct DatasetSpec {
    pub name: &'static str,
    pub url: &'static str,
    pub header: &'static [&'static str],
    pub format: RawFormat,
    pub rows: usize,
    /// Fingerprint of the canonical CSV, when known ahead of time.
    pub fingerprint: Option<&'static str>,
    /// Canonical CSV shipped with the crate for offline use.
    pub bundled: Option<&'static str>,
}

impl DatasetSpec {
    pub fn cols(&self) -> usize {
        self.header.len()
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn label_column(&self) -> &'static str {
        self.header[self.header.len() - 1]
    }
}

pub const IRIS: DatasetSpec = DatasetSpec {
    name: "iris",
    url: "https://archive.ics.uci.edu/ml/machine-learning-databases/iris/iris.data",
    header: &["sepal_length", "sepal_width", "petal_length", "petal_width", "species"],
    format: RawFormat::Comma,
    rows: 150,
    fingerprint: Some("775900c187948198e048777d6c00eff70ce8209bd4176c15ce4fb8599f4afb2d"),
    bundled: Some(include_str!("../data/iris.csv")),
};

pub const HABERMAN: DatasetSpec = DatasetSpec {
    name: "haberman",
    url: "https://archive.ics.uci.edu/ml/machine-learning-databases/haberman/haberman.data",
    header: &["age", "op_year", "positive_nodes", "survival_status"],
    format: RawFormat::Comma,
    rows: 306,
    fingerprint: Some("5d45cb836a265fef17e013bd974338a5aec92f54f119bc86301fa41f218592a3"),
    bundled: Some(include_str!("../data/haberman.csv")),
};

pub const SEEDS: DatasetSpec = DatasetSpec {
    name: "seeds",
    url: "https://archive.ics.uci.edu/ml/machine-learning-databases/00236/seeds_dataset.txt",
    header: &[
        "area",
        "perimeter",
        "compactness",
        "kernel_length",
        "kernel_width",
        "asymmetry",
        "groove_length",
        "variety",
    ],
    format: RawFormat::Whitespace,
    rows: 210,
    fingerprint: None,
    bundled: None,
};

pub const ALL: [DatasetSpec; 3] = [SEEDS, HABERMAN, IRIS];

pub fn spec(name: &str) -> Option<DatasetSpec> {
    ALL.iter().copied().find(|s| s.name.eq_ignore_ascii_case(name))
}

/// Turns a raw UCI file into the canonical CSV: the header line, then one
/// line per record with fields trimmed and comma joined.
pub fn convert(spec: &DatasetSpec, raw: &[u8]) -> Result<String, BenchError> {
    let text = std::str::from_utf8(raw).map_err(|e| BenchError::Shape(format!("{}: not UTF-8: {e}", spec.name)))?;
    let width = spec.cols();
    let records: Vec<Vec<&str>> = match spec.format {
        RawFormat::Comma => text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.split(',').map(str::trim).collect())
            .collect(),
        RawFormat::Whitespace => {
            let tokens: Vec<&str> = text.split_whitespace().collect();
            if !tokens.len().is_multiple_of(width) {
                return Err(BenchError::Shape(format!(
                    "{}: {} values do not divide into records of {width}",
                    spec.name,
                    tokens.len()
                )));
            }
            tokens.chunks(width).map(<[&str]>::to_vec).collect()
        }
    };
    if let Some((i, r)) = records.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(BenchError::Shape(format!(
            "{}: record {} has {} fields, expected {width}",
            spec.name,
            i + 1,
            r.len()
        )));
    }
    if records.len() != spec.rows {
        return Err(BenchError::Shape(format!(
            "{}: {} records, expected {}",
            spec.name,
            records.len(),
            spec.rows
        )));
    }
    let mut out = spec.header.join(",");
    out.push('\n');
    for r in records {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// SHA-256 over the header line followed by the sorted data lines, so two
/// copies with the same records in a different order agree.
pub fn fingerprint(csv: &str) -> String {
    let mut lines = csv.lines().filter(|l| !l.is_empty());
    let header = lines.next().unwrap_or("");
    let mut body: Vec<&str> = lines.collect();
    body.sort_unstable();
    let mut h = Sha256::new();
    h.update(header.as_bytes());
    h.update(b"\n");
    for l in body {
        h.update(l.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Checks a canonical CSV against the expected shape and pinned fingerprint.
pub fn verify(spec: &DatasetSpec, csv: &str) -> Result<String, BenchError> {
    let d = parse_csv(csv.as_bytes())?;
    if d.n_rows() != spec.rows || d.n_cols() != spec.cols() {
        return Err(BenchError::Shape(format!(
            "{}: {}x{}, expected {}x{}",
            spec.name,
            d.n_rows(),
            d.n_cols(),
            spec.rows,
            spec.cols()
        )));
    }
    let actual = fingerprint(csv);
    match spec.fingerprint {
        Some(expected) if expected != actual => Err(BenchError::Checksum {
            name: spec.name.to_owned(),
            expected: expected.to_owned(),
            actual,
        }),
        _ => Ok(actual),
    }
}

/// Where raw bytes come from. The HTTP implementation is the real one.
pub trait Source {
    fn get(&self, url: &str) -> Result<Vec<u8>, BenchError>;
}

pub struct HttpSource {
    client: reqwest::blocking::Client,
}

impl HttpSource {
    pub fn new() -> Result<Self, BenchError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| BenchError::Network(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Source for HttpSource {
    fn get(&self, url: &str) -> Result<Vec<u8>, BenchError> {
        let resp = self
            .client
            .get(url)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| BenchError::Network(format!("{url}: {e}")))?;
        let bytes = resp.bytes().map_err(|e| BenchError::Network(format!("{url}: {e}")))?;
        Ok(bytes.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Cached,
    Downloaded,
    Bundled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fetched {
    pub name: &'static str,
    pub path: PathBuf,
    pub rows: usize,
    pub fingerprint: String,
    pub origin: Origin,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".sha256");
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_owned(),
        source,
    }
}

/// A cached copy counts only if it still matches its sidecar.
fn cached(spec: &DatasetSpec, path: &Path) -> Option<String> {
    let csv = fs::read_to_string(path).ok()?;
    let recorded = fs::read_to_string(sidecar(path)).ok()?;
    let recorded = recorded.split_whitespace().next()?.to_owned();
    let fp = verify(spec, &csv).ok()?;
    (fp == recorded).then_some(fp)
}

fn write(spec: &DatasetSpec, path: &Path, csv: &str, fp: &str) -> Result<(), BenchError> {
    fs::write(path, csv).map_err(io_err(path))?;
    let side = sidecar(path);
    fs::write(&side, format!("{fp}  {}\n", spec.file_name())).map_err(io_err(&side))
}

/// Makes `dir/<name>.csv` present and verified. Offline mode never touches
/// the network: it accepts a verified cache or the bundled copy.
pub fn fetch(spec: &DatasetSpec, dir: &Path, offline: bool, source: &dyn Source) -> Result<Fetched, BenchError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(spec.file_name());
    let done = |fingerprint: String, origin| Fetched {
        name: spec.name,
        path: path.clone(),
        rows: spec.rows,
        fingerprint,
        origin,
    };
    if let Some(fp) = cached(spec, &path) {
        return Ok(done(fp, Origin::Cached));
    }
    if offline {
        let Some(csv) = spec.bundled else {
            return Err(BenchError::Network(format!(
                "{} is not cached in {} and offline mode forbids downloading; run `vanlearn-bench fetch` with network access",
                spec.name,
                dir.display()
            )));
        };
        let fp = verify(spec, csv)?;
        write(spec, &path, csv, &fp)?;
        return Ok(done(fp, Origin::Bundled));
    }
    let raw = source.get(spec.url).map_err(|e| match e {
        BenchError::Network(m) => BenchError::Network(format!("{m} (--offline uses the bundled copies where available)")),
        other => other,
    })?;
    let csv = convert(spec, &raw)?;
    let fp = verify(spec, &csv)?;
    write(spec, &path, &csv, &fp)?;
    Ok(done(fp, Origin::Downloaded))
}

/// Reads a previously fetched dataset.
pub fn load(spec: &DatasetSpec, dir: &Path) -> Result<Dataset, BenchError> {
    let path = dir.join(spec.file_name());
    let bytes = fs::read(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => BenchError::Network(format!(
            "{} has not been fetched into {}; run `vanlearn-bench fetch` first",
            spec.name,
            dir.display()
        )),
        _ => BenchError::Io { path: path.clone(), source: e },
    })?;
    Ok(parse_csv(&bytes)?)
}
