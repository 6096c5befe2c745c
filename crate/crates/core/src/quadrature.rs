//! Adaptive Simpson quadrature with mandatory split points.

use alloc::vec::Vec;

/// Panel budget shared by all subintervals of one integral.
pub const MAX_PANELS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum QuadError {
    #[error("quadrature did not converge within {panels} panels")]
    NoConvergence { panels: usize },
    #[error("integrand is not finite at x = {0}")]
    NonFinite(f64),
}

/// `int_a^b f` to absolute tolerance `tol`. Points in `splits` that fall
/// strictly inside `(a, b)` become panel boundaries, so kinks there do not
/// slow convergence.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, splits: &[f64], tol: f64) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut edges = Vec::with_capacity(splits.len() + 2);
    edges.push(lo);
    edges.extend(splits.iter().copied().filter(|&x| x > lo && x < hi));
    edges.push(hi);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let width = hi - lo;
    let mut panels = 0usize;
    let mut total = 0.0;
    for w in edges.windows(2) {
        let share = tol * (w[1] - w[0]) / width;
        total += simpson_segment(&f, w[0], w[1], share, &mut panels)?;
    }
    Ok(sign * total)
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

const MIN_DEPTH: u32 = 3;
const MAX_DEPTH: u32 = 60;

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64, QuadError> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(QuadError::NonFinite(x))
    }
}

fn simpson_segment<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, panels: &mut usize) -> Result<f64, QuadError> {
    let fa = eval(f, a)?;
    let fb = eval(f, b)?;
    let m = 0.5 * (a + b);
    let fm = eval(f, m)?;
    let mut stack = Vec::with_capacity(64);
    stack.push(Panel { a, b, fa, fm, fb, whole: (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth: 0 });
    let mut sum = 0.0;
    while let Some(p) = stack.pop() {
        *panels += 1;
        if *panels > MAX_PANELS {
            return Err(QuadError::NoConvergence { panels: MAX_PANELS });
        }
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = eval(f, lm)?;
        let frm = eval(f, rm)?;
        let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
        let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
        let delta = left + right - p.whole;
        let tiny = m <= p.a || m >= p.b || lm <= p.a || rm >= p.b;
        if (p.depth >= MIN_DEPTH && delta.abs() <= 15.0 * p.tol) || p.depth >= MAX_DEPTH || tiny {
            sum += left + right + delta / 15.0;
        } else {
            let half = 0.5 * p.tol;
            stack.push(Panel {
                a: m,
                b: p.b,
                fa: p.fm,
                fm: frm,
                fb: p.fb,
                whole: right,
                tol: half,
                depth: p.depth + 1,
            });
            stack.push(Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left, tol: half, depth: p.depth + 1 });
        }
    }
    Ok(sum)
}

/// Maximises `f` on `[a, b]` by golden-section search; assumes unimodality
/// on the bracket.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, &[], 1e-12).unwrap();
        assert!((v - (9.0 - 1.5 + 6.0)).abs() < 1e-12);
    }

    #[test]
    fn kink_at_split_point() {
        let v = integrate(|x: f64| x.abs(), -1.0, 3.0, &[0.0], 1e-12).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
        let w = integrate(|x: f64| x.abs(), -1.0, 3.0, &[], 1e-10).unwrap();
        assert!((w - 5.0).abs() < 1e-9);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let v = integrate(libm::exp, 1.0, 0.0, &[], 1e-12).unwrap();
        assert!((v + (core::f64::consts::E - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn gaussian_mass() {
        let pdf = |x: f64| libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * core::f64::consts::PI);
        let v = integrate(pdf, -40.0, 40.0, &[0.0], 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_integrand() {
        assert!(matches!(integrate(|x| 1.0 / x, 0.0, 1.0, &[], 1e-10), Err(QuadError::NonFinite(_))));
    }

    #[test]
    fn golden_section_peak() {
        let (x, y) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, 0.0, 1.0, 80);
        assert!((x - 0.3).abs() < 1e-7 && (y - 2.0).abs() < 1e-12);
    }
}
