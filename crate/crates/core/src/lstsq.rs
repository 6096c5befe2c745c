//! Small dense least squares via Householder QR, and polynomial fitting on
//! top of it.

use alloc::vec;
use alloc::vec::Vec;

use crate::chebyshev::substitute_affine;

/// Solves `min ||A c - y||_2` for a row-major `rows x cols` matrix. Columns
/// whose pivot falls below `1e-12` times the largest get coefficient zero.
/// Returns the solution and the residual sum of squares.
pub fn solve(a: &[f64], rows: usize, cols: usize, y: &[f64]) -> (Vec<f64>, f64) {
    debug_assert_eq!(a.len(), rows * cols);
    let mut r = a.to_vec();
    let mut rhs = y.to_vec();
    let steps = cols.min(rows);
    let mut diag = vec![0.0; cols];
    for j in 0..steps {
        let norm = libm::sqrt((j..rows).map(|i| r[i * cols + j] * r[i * cols + j]).sum::<f64>());
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[j * cols + j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..rows).map(|i| r[i * cols + j]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            diag[j] = alpha;
            continue;
        }
        for c in j..cols {
            let dot: f64 = (j..rows).map(|i| v[i - j] * r[i * cols + c]).sum();
            let s = 2.0 * dot / vnorm2;
            for i in j..rows {
                r[i * cols + c] -= s * v[i - j];
            }
        }
        let dot: f64 = (j..rows).map(|i| v[i - j] * rhs[i]).sum();
        let s = 2.0 * dot / vnorm2;
        for i in j..rows {
            rhs[i] -= s * v[i - j];
        }
        diag[j] = r[j * cols + j];
    }
    let biggest = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let mut x = vec![0.0; cols];
    for j in (0..steps).rev() {
        let d = r[j * cols + j];
        if d.abs() <= 1e-12 * biggest || d == 0.0 {
            continue;
        }
        let mut acc = rhs[j];
        for c in j + 1..cols {
            acc -= r[j * cols + c] * x[c];
        }
        x[j] = acc / d;
    }
    let ssr = residual(a, rows, cols, y, &x);
    (x, ssr)
}

fn residual(a: &[f64], rows: usize, cols: usize, y: &[f64], x: &[f64]) -> f64 {
    (0..rows)
        .map(|i| {
            let fit: f64 = (0..cols).map(|j| a[i * cols + j] * x[j]).sum();
            (y[i] - fit) * (y[i] - fit)
        })
        .sum()
}

/// Degree-`k` least-squares polynomial through `(xs, ys)`, monomial
/// coefficients in `x`, plus the residual sum of squares. The abscissas are
/// mapped to `[-1, 1]` before fitting.
pub fn polyfit(xs: &[f64], ys: &[f64], k: usize) -> (Vec<f64>, f64) {
    let n = xs.len();
    if n == 0 {
        return (vec![0.0], 0.0);
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (scale, shift) = if hi > lo { (2.0 / (hi - lo), -(hi + lo) / (hi - lo)) } else { (1.0, -lo) };
    let cols = k + 1;
    let mut a = Vec::with_capacity(n * cols);
    for &x in xs {
        let t = scale * x + shift;
        let mut p = 1.0;
        for _ in 0..cols {
            a.push(p);
            p *= t;
        }
    }
    let (c, ssr) = solve(&a, n, cols, ys);
    (substitute_affine(&c, scale, shift), ssr)
}
