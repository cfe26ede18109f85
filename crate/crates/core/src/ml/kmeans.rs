//! Lloyd's algorithm with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MlError;
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KMeansConfig<T: Scalar> {
    pub k: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Stop once no centroid moves farther than this.
    pub tol: T,
}

impl<T: Scalar> KMeansConfig<T> {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iters: 300,
            seed: 0,
            tol: T::of(1e-6),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<(), MlError> {
        if self.k == 0 {
            return Err(MlError::InvalidConfig("k must be >= 1".into()));
        }
        if self.max_iters == 0 {
            return Err(MlError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if self.tol.is_nan() || self.tol <= T::zero() {
            return Err(MlError::InvalidConfig("tol must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KMeansModel<T: Scalar> {
    pub centroids: DenseMatrix<T>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances from each point to its centroid.
    pub inertia: T,
    pub iterations_run: usize,
    /// Inertia after the initial assignment and after every Lloyd step.
    #[serde(default)]
    pub inertia_history: Vec<T>,
}

impl<T: Scalar> KMeansModel<T> {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        acc = acc + d * d;
    }
    acc
}

/// Nearest centroid per row, ties to the lowest index.
fn assign<T: Scalar>(data: &DenseMatrix<T>, centroids: &[Vec<T>]) -> (Vec<usize>, T) {
    let mut inertia = T::zero();
    let labels = data
        .row_iter()
        .map(|row| {
            let mut best = 0;
            let mut best_d = sq_dist(row, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = sq_dist(row, centroid);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            inertia = inertia + best_d;
            best
        })
        .collect();
    (labels, inertia)
}

fn inertia_of<T: Scalar>(data: &DenseMatrix<T>, centroids: &[Vec<T>], labels: &[usize]) -> T {
    data.row_iter()
        .zip(labels)
        .fold(T::zero(), |acc, (row, &l)| acc + sq_dist(row, &centroids[l]))
}

/// Member means for every non-empty cluster; empty clusters keep `None`.
fn member_means<T: Scalar>(data: &DenseMatrix<T>, labels: &[usize], k: usize) -> Vec<Option<Vec<T>>> {
    let d = data.cols();
    let mut sums = vec![vec![T::zero(); d]; k];
    let mut counts = vec![0usize; k];
    for (row, &l) in data.row_iter().zip(labels) {
        counts[l] += 1;
        for (s, &v) in sums[l].iter_mut().zip(row) {
            *s = *s + v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, n)| {
            (n > 0).then(|| {
                let n = T::of_usize(n);
                s.into_iter().map(|v| v / n).collect()
            })
        })
        .collect()
}

/// Recomputes centroids as member means. A cluster left empty takes over
/// the point farthest from its own centroid, chosen among clusters that
/// still have at least two members.
fn update_centroids<T: Scalar>(data: &DenseMatrix<T>, labels: &mut [usize], k: usize) -> Vec<Vec<T>> {
    let mut means = member_means(data, labels, k);
    while let Some(empty) = means.iter().position(Option::is_none) {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let mut far: Option<(usize, T)> = None;
        for (i, row) in data.row_iter().enumerate() {
            let l = labels[i];
            if counts[l] < 2 {
                continue;
            }
            let m = means[l].as_ref().expect("member cluster has a mean");
            let d = sq_dist(row, m);
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        // rows >= k guarantees some cluster has two members while one is empty
        let (point, _) = far.expect("a donor cluster exists");
        labels[point] = empty;
        means = member_means(data, labels, k);
    }
    means.into_iter().map(|m| m.expect("all clusters filled")).collect()
}

fn plus_plus_seeds<T: Scalar>(data: &DenseMatrix<T>, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let n = data.rows();
    let mut centroids = vec![data.row(rng.random_range(0..n)).to_vec()];
    let mut nearest: Vec<f64> = data
        .row_iter()
        .map(|r| sq_dist(r, &centroids[0]).as_f64())
        .collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = data.row(pick).to_vec();
        for (slot, row) in nearest.iter_mut().zip(data.row_iter()) {
            *slot = slot.min(sq_dist(row, &c).as_f64());
        }
        centroids.push(c);
    }
    centroids
}

/// Clusters the rows of `data` into `cfg.k` groups.
///
/// Stops when assignments stop changing, when no centroid moves more than
/// `cfg.tol`, or after `cfg.max_iters` update steps. The returned centroids
/// are always the means of their members, and the result is a pure
/// function of `(data, cfg)`.
pub fn kmeans_fit<T: Scalar>(data: &DenseMatrix<T>, cfg: &KMeansConfig<T>) -> Result<KMeansModel<T>, MlError> {
    cfg.validate()?;
    if data.rows() < cfg.k {
        return Err(MlError::TooFewRows {
            rows: data.rows(),
            required: cfg.k,
        });
    }
    if data.cols() == 0 {
        return Err(MlError::Shape("k-means needs at least one feature column".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = plus_plus_seeds(data, cfg.k, &mut rng);
    let (mut labels, first) = assign(data, &centroids);
    let mut history = vec![first];
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        let updated = update_centroids(data, &mut labels, cfg.k);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(T::zero(), T::max);
        centroids = updated;
        iterations += 1;

        let (next, inertia) = assign(data, &centroids);
        let unchanged = next == labels;
        labels = next;
        history.push(inertia);
        if unchanged || shift < cfg.tol {
            break;
        }
    }

    // re-center on the final assignment so centroids are exact member means
    let centroids = update_centroids(data, &mut labels, cfg.k);
    let inertia = inertia_of(data, &centroids, &labels);
    if history.last() != Some(&inertia) {
        history.push(inertia);
    }
    let flat: Vec<T> = centroids.into_iter().flatten().collect();
    Ok(KMeansModel {
        centroids: DenseMatrix::from_shape_vec(cfg.k, data.cols(), flat)?,
        assignments: labels,
        inertia,
        iterations_run: iterations,
        inertia_history: history,
    })
}
