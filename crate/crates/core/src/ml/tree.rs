//! CART classification tree with Gini impurity splits.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::MlError;
use crate::codec::Dataset;
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

/// Splits gaining less impurity than this are treated as no improvement.
pub const MIN_SPLIT_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case", bound = "T: Scalar")]
pub enum TreeNode<T: Scalar> {
    Leaf {
        class: String,
        count: usize,
    },
    /// Rows with `x[feature_index] <= threshold` go left.
    Split {
        feature_index: usize,
        threshold: T,
        left: Box<TreeNode<T>>,
        right: Box<TreeNode<T>>,
    },
}

impl<T: Scalar> TreeNode<T> {
    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TreeModel<T: Scalar> {
    pub root: TreeNode<T>,
    /// Distinct training labels in lexicographic order.
    pub class_labels: Vec<String>,
    pub n_features: usize,
}

impl<T: Scalar> TreeModel<T> {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn n_leaves(&self) -> usize {
        self.root.leaves()
    }

    pub fn predict_row(&self, row: &[T]) -> &str {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { class, .. } => return class,
                TreeNode::Split {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature_index] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Root-to-leaf decision rules, one per leaf, left subtree first.
    pub fn rules(&self, feature_names: &[String]) -> Vec<(String, String, usize)> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        collect_rules(&self.root, feature_names, &mut path, &mut out);
        out
    }
}

fn collect_rules<T: Scalar>(
    node: &TreeNode<T>,
    names: &[String],
    path: &mut Vec<String>,
    out: &mut Vec<(String, String, usize)>,
) {
    match node {
        TreeNode::Leaf { class, count } => {
            let rule = if path.is_empty() {
                "(all rows)".to_owned()
            } else {
                path.join(" AND ")
            };
            out.push((rule, class.clone(), *count));
        }
        TreeNode::Split {
            feature_index,
            threshold,
            left,
            right,
        } => {
            let name = names
                .get(*feature_index)
                .cloned()
                .unwrap_or_else(|| format!("x{feature_index}"));
            path.push(format!("{name} <= {threshold}"));
            collect_rules(left, names, path, out);
            path.pop();
            path.push(format!("{name} > {threshold}"));
            collect_rules(right, names, path, out);
            path.pop();
        }
    }
}

struct Candidate<T> {
    gain: f64,
    feature: usize,
    threshold: T,
}

struct Builder<'a, T: Scalar> {
    x: &'a DenseMatrix<T>,
    y: &'a [usize],
    labels: &'a [String],
    max_depth: Option<usize>,
}

/// `sum of squared class counts` bookkeeping for O(1) Gini updates.
fn gini(sum_sq: f64, n: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        1.0 - sum_sq / (n * n)
    }
}

impl<T: Scalar> Builder<'_, T> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.labels.len()];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    fn leaf(&self, counts: &[usize], n: usize) -> TreeNode<T> {
        // first maximum wins, and labels are sorted, so ties go to the
        // lexicographically smallest class
        let mut best = 0;
        for (c, &cnt) in counts.iter().enumerate() {
            if cnt > counts[best] {
                best = c;
            }
        }
        TreeNode::Leaf {
            class: self.labels[best].clone(),
            count: n,
        }
    }

    /// Best split by Gini gain plus the first valid split seen. Features
    /// are scanned in index order and thresholds ascending, and only a
    /// strictly larger gain replaces the incumbent.
    fn find_split(&self, idx: &[usize], parent_counts: &[usize]) -> (Option<Candidate<T>>, Option<Candidate<T>>) {
        let n = idx.len() as f64;
        let parent_sq: f64 = parent_counts.iter().map(|&c| (c * c) as f64).sum();
        let parent_gini = gini(parent_sq, n);
        let mut best: Option<Candidate<T>> = None;
        let mut first: Option<Candidate<T>> = None;
        let mut order = idx.to_vec();

        for f in 0..self.x.cols() {
            order.sort_by(|&a, &b| {
                self.x
                    .get(a, f)
                    .partial_cmp(&self.x.get(b, f))
                    .expect("finite features")
            });
            let mut left = vec![0usize; self.labels.len()];
            let mut right = parent_counts.to_vec();
            let (mut left_sq, mut right_sq) = (0.0, parent_sq);
            for pos in 0..order.len() - 1 {
                let c = self.y[order[pos]];
                left_sq += (2 * left[c] + 1) as f64;
                right_sq -= (2 * right[c] - 1) as f64;
                left[c] += 1;
                right[c] -= 1;

                let lo = self.x.get(order[pos], f);
                let hi = self.x.get(order[pos + 1], f);
                if lo >= hi {
                    continue;
                }
                let mut threshold = (lo + hi) / T::of(2.0);
                if threshold >= hi {
                    threshold = lo;
                }
                let nl = (pos + 1) as f64;
                let nr = n - nl;
                let weighted = (nl * gini(left_sq, nl) + nr * gini(right_sq, nr)) / n;
                let gain = parent_gini - weighted;
                if first.is_none() {
                    first = Some(Candidate {
                        gain,
                        feature: f,
                        threshold,
                    });
                }
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Candidate {
                        gain,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        (best, first)
    }

    fn build(&self, idx: Vec<usize>, depth: usize) -> TreeNode<T> {
        let counts = self.counts(&idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || self.max_depth.is_some_and(|m| depth >= m) {
            return self.leaf(&counts, idx.len());
        }
        let chosen = match self.find_split(&idx, &counts) {
            (Some(best), _) if best.gain > MIN_SPLIT_GAIN => best,
            // an impure node with no gain (XOR-like layouts) still splits so
            // that consistent data is always fitted exactly
            (_, Some(first)) => first,
            _ => return self.leaf(&counts, idx.len()),
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x.get(i, chosen.feature) <= chosen.threshold);
        TreeNode::Split {
            feature_index: chosen.feature,
            threshold: chosen.threshold,
            left: Box::new(self.build(l, depth + 1)),
            right: Box::new(self.build(r, depth + 1)),
        }
    }
}

/// Grows a tree on numeric features and string class labels.
pub fn fit_tree<T: Scalar, L: AsRef<str>>(
    x: &DenseMatrix<T>,
    labels: &[L],
    max_depth: Option<usize>,
) -> Result<TreeModel<T>, MlError> {
    if x.rows() == 0 {
        return Err(MlError::Empty("decision tree needs at least one row".into()));
    }
    if x.rows() != labels.len() {
        return Err(MlError::Shape(format!(
            "{} feature rows but {} labels",
            x.rows(),
            labels.len()
        )));
    }
    let class_labels: Vec<String> = labels
        .iter()
        .map(|l| l.as_ref())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();
    let y: Vec<usize> = labels
        .iter()
        .map(|l| {
            class_labels
                .binary_search_by(|c| c.as_str().cmp(l.as_ref()))
                .expect("label collected above")
        })
        .collect();
    let builder = Builder {
        x,
        y: &y,
        labels: &class_labels,
        max_depth,
    };
    let root = builder.build((0..x.rows()).collect(), 0);
    Ok(TreeModel {
        root,
        class_labels,
        n_features: x.cols(),
    })
}

/// Fits on a dataset whose last column is the class and whose other
/// columns are numeric features.
pub fn dtree_fit<T: Scalar>(dataset: &Dataset, max_depth: Option<usize>) -> Result<TreeModel<T>, MlError> {
    if dataset.n_cols() < 2 {
        return Err(MlError::Schema(
            "decision tree needs at least one feature column and one class column".into(),
        ));
    }
    if dataset.n_rows() == 0 {
        return Err(MlError::Empty("decision tree needs at least one row".into()));
    }
    let target = dataset.n_cols() - 1;
    let features: Vec<usize> = (0..target).collect();
    let x = dataset.to_matrix::<T>(&features)?;
    let labels: Vec<String> = dataset.column_cells(target).map(ToString::to_string).collect();
    fit_tree(&x, &labels, max_depth)
}

pub fn dtree_predict<T: Scalar>(model: &TreeModel<T>, x: &DenseMatrix<T>) -> Result<Vec<String>, MlError> {
    if x.cols() != model.n_features {
        return Err(MlError::Shape(format!(
            "tree was trained on {} features, input has {} columns",
            model.n_features,
            x.cols()
        )));
    }
    Ok(x.row_iter().map(|r| model.predict_row(r).to_owned()).collect())
}
