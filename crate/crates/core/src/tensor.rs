//! Dense 1-D and 2-D numeric containers.
//!
//! Both containers are immutable once built and reject NaN/Inf at
//! construction, so every consumer downstream may assume finite values.
//! Reductions accumulate strictly left to right, which keeps results
//! bit-reproducible between runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error("E_RAGGED: row {row} has {found} values, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("E_NON_FINITE: value at flat index {index} is NaN or infinite")]
    NonFinite { index: usize },
    #[error("E_SHAPE: {op} got {left:?} and {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("E_EMPTY: {0}")]
    Empty(&'static str),
}

impl TensorError {
    pub fn code(&self) -> &'static str {
        match self {
            TensorError::Ragged { .. } => "E_RAGGED",
            TensorError::NonFinite { .. } => "E_NON_FINITE",
            TensorError::Shape { .. } => "E_SHAPE",
            TensorError::Empty(_) => "E_EMPTY",
        }
    }
}

fn check_finite<T: Scalar>(values: &[T]) -> Result<(), TensorError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(TensorError::NonFinite { index }),
        None => Ok(()),
    }
}

/// A dense vector of finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>", bound = "T: Scalar")]
pub struct DenseVector<T: Scalar> {
    values: Vec<T>,
}

impl<T: Scalar> DenseVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self, TensorError> {
        check_finite(&values)?;
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![T::zero(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> T {
        self.values[i]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        self.values.iter()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn dot(&self, other: &Self) -> Result<T, TensorError> {
        if self.len() != other.len() {
            return Err(TensorError::Shape {
                op: "dot",
                left: (1, self.len()),
                right: (1, other.len()),
            });
        }
        Ok(dot(&self.values, &other.values))
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for DenseVector<T> {
    type Error = TensorError;

    fn try_from(values: Vec<T>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl<T: Scalar> From<DenseVector<T>> for Vec<T> {
    fn from(v: DenseVector<T>) -> Self {
        v.values
    }
}

/// Left-to-right dot product over equal-length slices.
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc + *x * *y;
    }
    acc
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawMatrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

/// A dense row-major matrix of finite values; element `(i, j)` lives at
/// `i * cols + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix<T>", bound = "T: Scalar")]
pub struct DenseMatrix<T: Scalar> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Scalar> TryFrom<RawMatrix<T>> for DenseMatrix<T> {
    type Error = TensorError;

    fn try_from(raw: RawMatrix<T>) -> Result<Self, Self::Error> {
        Self::from_shape_vec(raw.rows, raw.cols, raw.values)
    }
}

impl<T: Scalar> DenseMatrix<T> {
    /// Builds a matrix from a list of rows. An empty list gives a `0 x 0`
    /// matrix.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self, TensorError> {
        let Some(first) = rows.first() else {
            return Ok(Self::zeros(0, 0));
        };
        let cols = first.as_ref().len();
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (row, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(TensorError::Ragged {
                    row,
                    expected: cols,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        check_finite(&values)?;
        Ok(Self {
            rows: rows.len(),
            cols,
            values,
        })
    }

    pub fn from_shape_vec(rows: usize, cols: usize, values: Vec<T>) -> Result<Self, TensorError> {
        if rows.checked_mul(cols) != Some(values.len()) {
            return Err(TensorError::Shape {
                op: "from_shape_vec",
                left: (rows, cols),
                right: (1, values.len()),
            });
        }
        check_finite(&values)?;
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = T::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    /// New matrix holding only the listed columns, in the listed order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self, TensorError> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(TensorError::Shape {
                op: "select_columns",
                left: self.shape(),
                right: (1, bad),
            });
        }
        let mut values = Vec::with_capacity(self.rows * cols.len());
        for r in self.row_iter() {
            values.extend(cols.iter().map(|&c| r[c]));
        }
        Ok(Self {
            rows: self.rows,
            cols: cols.len(),
            values,
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, TensorError> {
        if self.cols != other.rows {
            return Err(TensorError::Shape {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut values = Vec::with_capacity(n * p);
        for i in 0..n {
            let a = self.row(i);
            for j in 0..p {
                let mut acc = T::zero();
                for (k, &aik) in a.iter().enumerate().take(m) {
                    acc = acc + aik * other.values[k * p + j];
                }
                values.push(acc);
            }
        }
        Ok(Self {
            rows: n,
            cols: p,
            values,
        })
    }

    /// Matrix-vector product `self * v`.
    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>, TensorError> {
        if self.cols != v.len() {
            return Err(TensorError::Shape {
                op: "matvec",
                left: self.shape(),
                right: (v.len(), 1),
            });
        }
        Ok(self.row_iter().map(|r| dot(r, v)).collect())
    }

    pub fn transpose(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                values.push(self.values[i * self.cols + j]);
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            values,
        }
    }

    pub fn column_means(&self) -> Result<DenseVector<T>, TensorError> {
        if self.rows == 0 {
            return Err(TensorError::Empty("column_means of a matrix with no rows"));
        }
        let mut sums = vec![T::zero(); self.cols];
        for r in self.row_iter() {
            for (s, &v) in sums.iter_mut().zip(r) {
                *s = *s + v;
            }
        }
        let n = T::of_usize(self.rows);
        Ok(DenseVector {
            values: sums.into_iter().map(|s| s / n).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;

    #[test]
    fn empty_input_is_zero_by_zero() {
        let m = M::from_rows::<Vec<f64>>(&[]).unwrap();
        assert_eq!(m.shape(), (0, 0));
    }

    #[test]
    fn rows_are_laid_out_row_major() {
        let m = M::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.get(1, 0), 3.0);
    }

    #[test]
    fn ragged_and_non_finite_rows_are_rejected() {
        let ragged = M::from_rows(&[vec![1.0, 2.0], vec![3.0]]);
        assert_eq!(
            ragged.unwrap_err(),
            TensorError::Ragged {
                row: 1,
                expected: 2,
                found: 1
            }
        );
        let nan = M::from_rows(&[[1.0, f64::NAN]]).unwrap_err();
        assert_eq!(nan.code(), "E_NON_FINITE");
        assert!(DenseVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn matmul_identity_zero_and_small_product() {
        let a = M::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(a.matmul(&M::identity(2)).unwrap(), a);
        assert_eq!(a.matmul(&M::zeros(2, 3)).unwrap(), M::zeros(2, 3));
        let b = M::from_rows(&[[5.0], [6.0]]).unwrap();
        assert_eq!(a.matmul(&b).unwrap().as_slice(), &[17.0, 39.0]);
        assert_eq!(b.matmul(&b).unwrap_err().code(), "E_SHAPE");
    }

    #[test]
    fn transpose_cases() {
        assert_eq!(M::identity(3).transpose(), M::identity(3));
        assert_eq!(M::zeros(0, 5).transpose().shape(), (5, 0));
        let row = M::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let col = row.transpose();
        assert_eq!(col.shape(), (3, 1));
        assert_eq!(col.as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn column_means_cases() {
        let single = M::from_rows(&[[2.0, 4.0]]).unwrap();
        assert_eq!(single.column_means().unwrap().as_slice(), &[2.0, 4.0]);
        let m = M::from_rows(&[[1.0, 1.0], [3.0, 1.0]]).unwrap();
        assert_eq!(m.column_means().unwrap().as_slice(), &[2.0, 1.0]);
        let c = M::from_rows(&[[0.3; 3]; 7]).unwrap();
        for v in c.column_means().unwrap().iter() {
            approx::assert_abs_diff_eq!(*v, 0.3, epsilon = 1e-15);
        }
        assert_eq!(M::zeros(0, 2).column_means().unwrap_err().code(), "E_EMPTY");
    }

    #[test]
    fn select_columns_reorders() {
        let m = M::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let s = m.select_columns(&[2, 0]).unwrap();
        assert_eq!(s.as_slice(), &[3.0, 1.0, 6.0, 4.0]);
        assert!(m.select_columns(&[3]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let a = DenseMatrix::<f32>::from_rows(&[[1.0f32, 2.0], [3.0, 4.0]]).unwrap();
        let b = DenseMatrix::<f32>::from_rows(&[[5.0f32], [6.0]]).unwrap();
        assert_eq!(a.matmul(&b).unwrap().as_slice(), &[17.0f32, 39.0]);
    }

    #[test]
    fn serde_rejects_inconsistent_shape() {
        let ok: M = serde_json::from_str(r#"{"rows":1,"cols":2,"values":[1.0,2.0]}"#).unwrap();
        assert_eq!(ok.shape(), (1, 2));
        assert!(serde_json::from_str::<M>(r#"{"rows":2,"cols":2,"values":[1.0]}"#).is_err());
    }
}
