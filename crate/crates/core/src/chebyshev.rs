//! Chebyshev interpolation on an interval with conversion to the monomial
//! basis in `x`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ChebError {
    #[error("interval [{0}, {1}] is degenerate")]
    Degenerate(f64, f64),
}

/// Smallest interval width accepted.
pub const MIN_WIDTH: f64 = 1e-9;

/// Nodes `mid + half * cos((2j+1) pi / (2(k+1)))`, `j = 0..=k`.
pub fn nodes(k: usize, alpha: f64, beta: f64) -> Vec<f64> {
    let mid = 0.5 * (alpha + beta);
    let half = 0.5 * (beta - alpha);
    let n = (k + 1) as f64;
    (0..=k).map(|j| mid + half * libm::cos((2 * j + 1) as f64 * PI / (2.0 * n))).collect()
}

/// Chebyshev coefficients `c_0..c_k` of the interpolant in `t in [-1, 1]`.
pub fn cheb_coeffs<F: Fn(f64) -> f64>(f: F, k: usize, alpha: f64, beta: f64) -> Result<Vec<f64>, ChebError> {
    if !(beta - alpha >= MIN_WIDTH) {
        return Err(ChebError::Degenerate(alpha, beta));
    }
    let xs = nodes(k, alpha, beta);
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let n = (k + 1) as f64;
    let mut c = vec![0.0; k + 1];
    for (i, ci) in c.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, fj) in fs.iter().enumerate() {
            acc += fj * libm::cos(i as f64 * (2 * j + 1) as f64 * PI / (2.0 * n));
        }
        *ci = 2.0 * acc / n;
    }
    c[0] *= 0.5;
    Ok(c)
}

/// Interpolant through the `k + 1` Chebyshev nodes of `[alpha, beta]`, as
/// monomial coefficients in `x` (length `k + 1`).
pub fn chebyshev_interpolate<F: Fn(f64) -> f64>(f: F, k: usize, alpha: f64, beta: f64) -> Result<Vec<f64>, ChebError> {
    let c = cheb_coeffs(f, k, alpha, beta)?;
    let mut p = to_monomial(&c, alpha, beta);
    p.resize(k + 1, 0.0);
    Ok(p)
}

/// Like [`chebyshev_interpolate`] but drops trailing Chebyshev terms that are
/// at rounding-noise level first. On short intervals far from the origin the
/// high-order terms are pure noise, and expanding them into powers of `x`
/// produces huge cancelling coefficients. The noise floor is absolute below
/// unit scale: targets such as `silu(x) - crude(x)` are small differences of
/// O(1) values and carry O(1) rounding noise.
pub fn chebyshev_fit<F: Fn(f64) -> f64>(f: F, k: usize, alpha: f64, beta: f64) -> Result<Vec<f64>, ChebError> {
    let mut c = cheb_coeffs(f, k, alpha, beta)?;
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-14 * scale.max(1.0);
    while c.len() > 1 && c[c.len() - 1].abs() <= floor {
        c.pop();
    }
    Ok(to_monomial(&c, alpha, beta))
}

/// Expands `sum_i c_i T_i(t)` with `t = (2x - alpha - beta) / (beta - alpha)`
/// into monomial coefficients in `x`.
pub fn to_monomial(c: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    let n = c.len();
    let mut in_t = vec![0.0; n];
    let mut t_prev = vec![0.0; n];
    let mut t_cur = vec![0.0; n];
    t_prev[0] = 1.0;
    in_t[0] += c[0];
    if n > 1 {
        t_cur[1] = 1.0;
        in_t[1] += c[1];
    }
    for ci in c.iter().skip(2) {
        let mut next = vec![0.0; n];
        for j in 0..n - 1 {
            next[j + 1] += 2.0 * t_cur[j];
        }
        for j in 0..n {
            next[j] -= t_prev[j];
        }
        for j in 0..n {
            in_t[j] += ci * next[j];
        }
        t_prev = core::mem::replace(&mut t_cur, next);
    }
    let half = 0.5 * (beta - alpha);
    let mid = 0.5 * (alpha + beta);
    substitute_affine(&in_t, 1.0 / half, -mid / half)
}

/// Coefficients of `p(a x + b)` given those of `p`.
pub fn substitute_affine(p: &[f64], a: f64, b: f64) -> Vec<f64> {
    let n = p.len();
    let mut out = vec![0.0; n];
    for &coef in p.iter().rev() {
        // out <- out * (a x + b) + coef
        let mut next = vec![0.0; n];
        for j in 0..n {
            if out[j] != 0.0 {
                next[j] += b * out[j];
                if j + 1 < n {
                    next[j + 1] += a * out[j];
                }
            }
        }
        next[0] += coef;
        out = next;
    }
    out
}
