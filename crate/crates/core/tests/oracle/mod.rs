//! Reference implementations used only to check the library. Each one is
//! written the slow obvious way and shares no code with the crate.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::HashMap;

/// Triple loop, accumulating `k` left to right.
pub fn naive_matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let inner = b.len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut acc = 0.0;
            for k in 0..inner {
                acc += a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-12, "singular system");
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Least squares with an intercept through `X^T X w = X^T y` on the design
/// matrix `[x, 1]`. Returns (weights, intercept).
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let d = x[0].len() + 1;
    let design: Vec<Vec<f64>> = x
        .iter()
        .map(|r| r.iter().copied().chain(std::iter::once(1.0)).collect())
        .collect();
    let mut xtx = vec![vec![0.0; d]; d];
    let mut xty = vec![0.0; d];
    for (r, &t) in design.iter().zip(y) {
        for i in 0..d {
            xty[i] += r[i] * t;
            for j in 0..d {
                xtx[i][j] += r[i] * r[j];
            }
        }
    }
    let mut w = gauss_solve(xtx, xty);
    let b = w.pop().unwrap();
    (w, b)
}

fn sse(points: &[Vec<f64>]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let d = points[0].len();
    let n = points.len() as f64;
    let mut total = 0.0;
    for j in 0..d {
        let mean = points.iter().map(|p| p[j]).sum::<f64>() / n;
        total += points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>();
    }
    total
}

/// Global minimum inertia over every split into two non-empty clusters.
pub fn exhaustive_two_means(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    assert!((2..=20).contains(&n));
    let mut best = f64::INFINITY;
    // fixing point 0 in cluster A visits each partition once
    for mask in 0u32..(1 << (n - 1)) {
        let (mut a, mut b) = (vec![points[0].clone()], Vec::new());
        for i in 1..n {
            if mask & (1 << (i - 1)) != 0 {
                b.push(points[i].clone());
            } else {
                a.push(points[i].clone());
            }
        }
        if b.is_empty() {
            continue;
        }
        best = best.min(sse(&a) + sse(&b));
    }
    best
}

/// Central finite-difference gradient.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, at: &[f64], h: f64) -> Vec<f64> {
    let mut p = at.to_vec();
    (0..at.len())
        .map(|i| {
            p[i] = at[i] + h;
            let up = f(&p);
            p[i] = at[i] - h;
            let down = f(&p);
            p[i] = at[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// True when some threshold puts every `lo` label strictly below every
/// other label on a single feature.
pub fn threshold_separable(x: &[f64], labels: &[&str], lo: &str) -> bool {
    let max_lo = x
        .iter()
        .zip(labels)
        .filter(|(_, l)| **l == lo)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_hi = x
        .iter()
        .zip(labels)
        .filter(|(_, l)| **l != lo)
        .map(|(v, _)| *v)
        .fold(f64::INFINITY, f64::min);
    max_lo < min_hi
}

/// Feature vectors that appear with more than one label.
pub fn contradictory_duplicates(rows: &[Vec<f64>], labels: &[String]) -> Vec<Vec<f64>> {
    let mut seen: HashMap<Vec<u64>, &str> = HashMap::new();
    let mut bad = Vec::new();
    for (r, l) in rows.iter().zip(labels) {
        let key: Vec<u64> = r.iter().map(|v| v.to_bits()).collect();
        match seen.get(&key) {
            Some(prev) if *prev != l => bad.push(r.clone()),
            Some(_) => {}
            None => {
                seen.insert(key, l);
            }
        }
    }
    bad
}

#[test]
fn oracles_agree_with_hand_results() {
    assert_eq!(
        naive_matmul(&[vec![1.0, 2.0], vec![3.0, 4.0]], &[vec![5.0], vec![6.0]]),
        vec![vec![17.0], vec![39.0]]
    );
    let (w, b) = normal_equations(&[vec![0.0], vec![1.0], vec![2.0]], &[1.0, 3.0, 5.0]);
    assert!((w[0] - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    let pts = [vec![0.0, 0.0], vec![0.0, 1.0], vec![10.0, 10.0], vec![10.0, 11.0]];
    assert!((exhaustive_two_means(&pts) - 1.0).abs() < 1e-12);
    let g = central_gradient(|p| p[0] * p[0] + 3.0 * p[1], &[2.0, 0.0], 1e-6);
    assert!((g[0] - 4.0).abs() < 1e-6 && (g[1] - 3.0).abs() < 1e-6);
}
