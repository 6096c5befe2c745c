//! Error metrics and the accuracy-guided generator: a greedy interval scan
//! that fits Chebyshev pieces under a per-piece error budget, wrapped in a
//! binary search for the largest budget whose approximation keeps the
//! model's fixed-point accuracy.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::activations::Target;
use crate::chebyshev::{chebyshev_fit, ChebError};
use crate::piecewise::{horner_compensated, PiecewiseError, PiecewiseParts, PiecewisePoly, Provenance};
use crate::quadrature::{golden_max, integrate, QuadError};
use crate::search::Theta;

/// Upper end of the budget search.
pub const MAX_APPROX_ERROR: f64 = 1.0;
/// Absolute tolerance of the weighted-error quadrature.
pub const QUAD_TOL: f64 = 1e-10;
/// Generator tag recorded in provenance.
pub const GENERATOR: &str = "accuracy_guided";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApproxError {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Interpolation(#[from] ChebError),
    #[error(transparent)]
    Piecewise(#[from] PiecewiseError),
    #[error("piece [{alpha}, {beta}] exceeds the error budget {budget} at the minimum width")]
    BudgetUnmet { alpha: f64, beta: f64, budget: f64 },
    #[error("invalid interval [{0}, {1}]")]
    BadInterval(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum DensityModel {
    StandardNormal,
    Normal { mean: f64, var: f64 },
    Uniform { a: f64, b: f64 },
}

impl DensityModel {
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            DensityModel::StandardNormal => libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI),
            DensityModel::Normal { mean, var } => {
                let z = x - mean;
                libm::exp(-0.5 * z * z / var) / libm::sqrt(2.0 * PI * var)
            }
            DensityModel::Uniform { a, b } => {
                if x >= a && x <= b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
        }
    }

    /// `sup` of the pdf over `[alpha, beta]`.
    pub fn max_pdf(&self, alpha: f64, beta: f64) -> f64 {
        let mode = match *self {
            DensityModel::StandardNormal => 0.0,
            DensityModel::Normal { mean, .. } => mean,
            DensityModel::Uniform { a, b } => {
                return if beta < a || alpha > b { 0.0 } else { 1.0 / (b - a) };
            }
        };
        self.pdf(mode.clamp(alpha, beta))
    }

    /// Points where the pdf is not smooth.
    fn kinks(&self) -> Vec<f64> {
        match *self {
            DensityModel::Uniform { a, b } => vec![a, b],
            _ => Vec::new(),
        }
    }
}

/// `(1 / (beta - alpha)) int_alpha^beta P(x) |f(x) - p(x)| dx`.
pub fn error_mean<F: Fn(f64) -> f64>(
    density: &DensityModel,
    f: F,
    p: &[f64],
    alpha: f64,
    beta: f64,
    kinks: &[f64],
) -> Result<f64, ApproxError> {
    if !(alpha < beta) {
        return Err(ApproxError::BadInterval(alpha, beta));
    }
    let width = beta - alpha;
    let mut splits = density.kinks();
    splits.extend_from_slice(kinks);
    // tolerance on the mean, not on the raw integral
    let tol = QUAD_TOL * width.min(1.0);
    let integral = integrate(|x| density.pdf(x) * (f(x) - horner_compensated(p, x)).abs(), alpha, beta, &splits, tol)?;
    Ok(integral / width)
}

/// `max |f - p|` over `[alpha, beta]`: a 1001-point grid, then golden-section
/// refinement around the best grid point.
pub fn error_max<F: Fn(f64) -> f64>(f: F, p: &[f64], alpha: f64, beta: f64) -> f64 {
    const N: usize = 1000;
    let err = |x: f64| (f(x) - horner_compensated(p, x)).abs();
    let h = (beta - alpha) / N as f64;
    let mut best = (0usize, -1.0f64);
    for i in 0..=N {
        let x = if i == N { beta } else { alpha + h * i as f64 };
        let v = err(x);
        if v > best.1 {
            best = (i, v);
        }
    }
    let lo = (alpha + h * best.0.saturating_sub(1) as f64).max(alpha);
    let hi = (alpha + h * (best.0 + 1) as f64).min(beta);
    let (_, refined) = golden_max(err, lo, hi, 60);
    best.1.max(refined)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorMetric {
    Mean(DensityModel),
    Max,
}

/// Result of one interval scan.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
    /// Pieces of one grid step that still exceed the budget.
    pub forced: Vec<usize>,
    pub errors: Vec<f64>,
}

/// Greedy growth over the grid `s + j (e - s) / m`: extend the current piece
/// one step at a time while its interpolant stays within `budget`, commit the
/// last fitting interval on the first violation, and commit a single step
/// regardless if even that fails (recorded in `forced`).
#[allow(clippy::too_many_arguments)]
pub fn scan<F: Fn(f64) -> f64>(
    f: F,
    kinks: &[f64],
    s: f64,
    e: f64,
    m: usize,
    k: usize,
    budget: f64,
    metric: ErrorMetric,
) -> Result<Scan, ApproxError> {
    if !(s < e) || m == 0 {
        return Err(ApproxError::BadInterval(s, e));
    }
    let grid = |j: usize| if j >= m { e } else { s + (e - s) * j as f64 / m as f64 };
    let fit = |a: f64, b: f64| -> Result<(Vec<f64>, f64), ApproxError> {
        let p = chebyshev_fit(&f, k, a, b)?;
        let err = match metric {
            // an error the quadrature cannot resolve is over every budget
            ErrorMetric::Mean(d) => match error_mean(&d, &f, &p, a, b, kinks) {
                Err(ApproxError::Quadrature(QuadError::NoConvergence { .. })) => f64::INFINITY,
                r => r?,
            },
            ErrorMetric::Max => error_max(&f, &p, a, b),
        };
        Ok((p, err))
    };

    let mut out = Scan { breakpoints: vec![s], pieces: Vec::new(), forced: Vec::new(), errors: Vec::new() };
    let mut lo = 0usize;
    while lo < m {
        let mut hi = lo + 1;
        let (mut p, mut err) = fit(grid(lo), grid(hi))?;
        if err > budget {
            out.forced.push(out.pieces.len());
        } else {
            while hi < m {
                let (q, qerr) = fit(grid(lo), grid(hi + 1))?;
                if qerr > budget {
                    break;
                }
                p = q;
                err = qerr;
                hi += 1;
            }
        }
        out.pieces.push(p);
        out.errors.push(err);
        out.breakpoints.push(grid(hi));
        lo = hi;
    }
    Ok(out)
}

/// Fixed-point accuracy `eta'` of a model whose activations are replaced by
/// a candidate approximation, evaluated on the candidate's ring.
pub trait AccuracyEvaluator {
    fn accuracy(&self, pp: &PiecewisePoly) -> f64;
}

impl<F: Fn(&PiecewisePoly) -> f64> AccuracyEvaluator for F {
    fn accuracy(&self, pp: &PiecewisePoly) -> f64 {
        self(pp)
    }
}

/// `(eta - eta') / eta`; zero when the reference accuracy is zero.
pub fn accuracy_loss(eta: f64, eta_prime: f64) -> f64 {
    if eta > 0.0 {
        (eta - eta_prime) / eta
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenConfig {
    pub s: f64,
    pub e: f64,
    pub density: DensityModel,
    pub nu: f64,
    pub max_iters: usize,
    /// Stop once `(hi - lo) / hi` falls below this.
    pub rel_tol: f64,
    pub max_error: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            s: -5.0,
            e: 5.0,
            density: DensityModel::StandardNormal,
            nu: 1e-2,
            max_iters: 12,
            rel_tol: 1e-3,
            max_error: MAX_APPROX_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenProbe {
    pub delta: f64,
    pub pieces: usize,
    pub forced: usize,
    /// `None` when the candidate was rejected before measuring accuracy.
    pub eta_prime: Option<f64>,
    pub loss: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenReport {
    pub theta: Theta,
    pub eta: f64,
    pub probes: Vec<GenProbe>,
    pub accepted_delta: Option<f64>,
}

/// Fits `target` over `[s, e]` for budget `delta` and assembles the
/// candidate, without any accuracy check.
pub fn candidate(theta: &Theta, target: &Target, cfg: &GenConfig, delta: f64) -> Result<PiecewisePoly, ApproxError> {
    let sc = scan(
        |x| target.eval(x),
        target.kinks(),
        cfg.s,
        cfg.e,
        theta.m,
        theta.k,
        delta / theta.m as f64,
        ErrorMetric::Mean(cfg.density),
    )?;
    let (tail_left, tail_right) = target.tails();
    let mut provenance = Provenance::new(GENERATOR);
    provenance.delta = Some(delta);
    provenance.forced_pieces = sc.forced;
    provenance.notes.insert("budget_per_piece".to_string(), (delta / theta.m as f64).to_string());
    Ok(PiecewisePoly::new(PiecewiseParts {
        function: target.function_name().to_string(),
        theta: *theta,
        breakpoints: sc.breakpoints,
        pieces: sc.pieces,
        tail_left,
        tail_right,
        crude: target.crude(),
        provenance,
    })?)
}

/// Binary search for the largest `delta` in `(0, max_error]` whose candidate
/// satisfies `(eta - eta') / eta <= nu` with at most `theta.m` pieces.
/// Returns the candidate for the largest accepted `delta`, if any.
pub fn gen_accurate_approx<A: AccuracyEvaluator + ?Sized>(
    theta: &Theta,
    target: &Target,
    cfg: &GenConfig,
    acc: &A,
    eta: f64,
) -> Result<(Option<PiecewisePoly>, GenReport), ApproxError> {
    let mut report = GenReport { theta: *theta, eta, probes: Vec::new(), accepted_delta: None };
    let mut lo = 0.0;
    let mut hi = cfg.max_error;
    let mut best: Option<PiecewisePoly> = None;
    let mut seen: Vec<(PiecewisePoly, f64)> = Vec::new();
    for _ in 0..cfg.max_iters {
        if hi > 0.0 && (hi - lo) / hi < cfg.rel_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let pp = candidate(theta, target, cfg, mid)?;
        let mut probe = GenProbe {
            delta: mid,
            pieces: pp.num_pieces(),
            forced: pp.provenance().forced_pieces.len(),
            eta_prime: None,
            loss: None,
            accepted: false,
        };
        if pp.num_pieces() <= theta.m {
            let eta_prime = match seen.iter().find(|(q, _)| same_shape(q, &pp)) {
                Some(&(_, a)) => a,
                None => {
                    let a = acc.accuracy(&pp);
                    seen.push((pp.clone(), a));
                    a
                }
            };
            let loss = accuracy_loss(eta, eta_prime);
            probe.eta_prime = Some(eta_prime);
            probe.loss = Some(loss);
            probe.accepted = loss <= cfg.nu;
        }
        report.probes.push(probe.clone());
        if probe.accepted {
            lo = mid;
            report.accepted_delta = Some(mid);
            best = Some(pp);
        } else {
            hi = mid;
        }
    }
    Ok((best, report))
}

fn same_shape(a: &PiecewisePoly, b: &PiecewisePoly) -> bool {
    a.breakpoints() == b.breakpoints() && a.pieces() == b.pieces()
}
