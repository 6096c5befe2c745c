//! Comparison approximations: MiniONN-style least-squares splines, a ReLU
//! swap, the MPCFormer quadratic for GeLU, and a fixed-threshold max-error
//! generator.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::approx::{scan, ApproxError, ErrorMetric};
use crate::lstsq::polyfit;
use crate::piecewise::{horner, PiecewiseError, PiecewiseParts, PiecewisePoly, Provenance, TailPoly};
use crate::ring::RingSpec;
use crate::search::Theta;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error("invalid config: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Piecewise(#[from] PiecewiseError),
}

pub const BASELINE_NAMES: [&str; 4] = ["minionn", "relu", "mpcformer", "nfgen"];

fn default_ring() -> RingSpec {
    RingSpec::new(128, 64).expect("valid ring")
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MiniOnnConfig {
    /// Grid size.
    pub n: usize,
    /// Interior switchover points to add.
    pub m: usize,
    pub k: usize,
    pub a: f64,
    pub b: f64,
}

impl Default for MiniOnnConfig {
    fn default() -> Self {
        MiniOnnConfig { n: 1000, m: 20, k: 3, a: -5.0, b: 5.0 }
    }
}

/// Sum of squared residuals of the least-squares fit on grid points
/// `lo..=hi`.
fn segment_ssr(xs: &[f64], ys: &[f64], lo: usize, hi: usize, k: usize) -> f64 {
    polyfit(&xs[lo..=hi], &ys[lo..=hi], k).1
}

/// Greedy switchover selection: starting from `{a, b}`, repeatedly add the
/// grid point that minimises the total squared residual of per-segment
/// degree-`k` fits, until `m + 2` points are chosen. Ties go to the lowest
/// grid index.
pub fn minionn_approx<F: Fn(f64) -> f64>(
    f: F,
    function: &str,
    cfg: &MiniOnnConfig,
    tails: (TailPoly, TailPoly),
) -> Result<PiecewisePoly, BaselineError> {
    if cfg.n <= cfg.m + 2 {
        return Err(BaselineError::Config("n must exceed m + 2"));
    }
    if cfg.k < 1 {
        return Err(BaselineError::Config("k must be at least 1"));
    }
    if !(cfg.a < cfg.b) {
        return Err(BaselineError::Config("a must be below b"));
    }
    let n = cfg.n;
    let xs: Vec<f64> =
        (0..n).map(|i| if i == n - 1 { cfg.b } else { cfg.a + (cfg.b - cfg.a) * i as f64 / (n - 1) as f64 }).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();

    // chosen switchovers as grid indices, kept sorted, with cached segment SSRs
    let mut chosen = vec![0usize, n - 1];
    let mut seg_ssr = vec![segment_ssr(&xs, &ys, 0, n - 1, cfg.k)];
    while chosen.len() < cfg.m + 2 {
        let total: f64 = seg_ssr.iter().sum();
        let mut best: Option<(usize, usize, f64, f64, f64)> = None;
        for s in 0..seg_ssr.len() {
            let (lo, hi) = (chosen[s], chosen[s + 1]);
            for c in lo + 1..hi {
                let left = segment_ssr(&xs, &ys, lo, c, cfg.k);
                let right = segment_ssr(&xs, &ys, c, hi, cfg.k);
                let fitness = total - seg_ssr[s] + left + right;
                let better = match best {
                    None => true,
                    Some((bc, _, bf, _, _)) => fitness < bf || (fitness == bf && c < bc),
                };
                if better {
                    best = Some((c, s, fitness, left, right));
                }
            }
        }
        let Some((c, s, _, left, right)) = best else {
            break;
        };
        chosen.insert(s + 1, c);
        seg_ssr.splice(s..=s, [left, right]);
    }

    let breakpoints: Vec<f64> = chosen.iter().map(|&i| xs[i]).collect();
    let pieces: Vec<Vec<f64>> =
        chosen.windows(2).map(|w| polyfit(&xs[w[0]..=w[1]], &ys[w[0]..=w[1]], cfg.k).0).collect();
    let max_jump = pieces
        .windows(2)
        .zip(&breakpoints[1..])
        .map(|(p, &x)| (horner(&p[0], x) - horner(&p[1], x)).abs())
        .fold(0.0f64, f64::max);

    let mut provenance = Provenance::new("minionn");
    provenance.notes.insert("final_fit".to_string(), "per-segment least squares (no smoothing spline)".to_string());
    provenance.notes.insert("max_jump".to_string(), format!("{max_jump}"));
    provenance.notes.insert("fitness".to_string(), format!("{}", seg_ssr.iter().sum::<f64>()));
    let m = pieces.len();
    Ok(PiecewisePoly::new(PiecewiseParts {
        function: function.to_string(),
        theta: Theta { m, k: cfg.k, ring: default_ring() },
        breakpoints,
        pieces,
        tail_left: tails.0,
        tail_right: tails.1,
        crude: None,
        provenance,
    })?)
}

/// `max(0, x)` as a two-piece approximation.
pub fn relu_swap() -> PiecewisePoly {
    PiecewisePoly::new(PiecewiseParts {
        function: "relu".to_string(),
        theta: Theta { m: 2, k: 1, ring: default_ring() },
        breakpoints: vec![-5.0, 0.0, 5.0],
        pieces: vec![vec![0.0], vec![0.0, 1.0]],
        tail_left: TailPoly::linear(0.0, 0.0),
        tail_right: TailPoly::linear(0.0, 1.0),
        crude: None,
        provenance: Provenance::new("relu"),
    })
    .expect("static baseline is valid")
}

/// `0.125 x^2 + 0.25 x + 0.5` everywhere.
pub fn mpcformer_gelu() -> PiecewisePoly {
    let quad = vec![0.5, 0.25, 0.125];
    PiecewisePoly::new(PiecewiseParts {
        function: "gelu".to_string(),
        theta: Theta { m: 1, k: 2, ring: default_ring() },
        breakpoints: vec![-5.0, 5.0],
        pieces: vec![quad.clone()],
        tail_left: TailPoly::new(quad.clone()),
        tail_right: TailPoly::new(quad),
        crude: None,
        provenance: Provenance::new("mpcformer"),
    })
    .expect("static baseline is valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaxErrorConfig {
    pub delta: f64,
    pub k: usize,
    pub m_cap: usize,
    pub s: f64,
    pub e: f64,
    pub ring: RingSpec,
}

impl Default for MaxErrorConfig {
    fn default() -> Self {
        MaxErrorConfig { delta: 1e-3, k: 10, m_cap: 10_000, s: -5.0, e: 5.0, ring: default_ring() }
    }
}

/// The greedy scan with the maximum error against a fixed threshold: no
/// density weighting, no crude component, no accuracy feedback.
pub fn nfgen_mode<F: Fn(f64) -> f64>(
    f: F,
    function: &str,
    kinks: &[f64],
    cfg: &MaxErrorConfig,
    tails: (TailPoly, TailPoly),
) -> Result<PiecewisePoly, BaselineError> {
    if !(cfg.delta > 0.0) {
        return Err(BaselineError::Config("delta must be positive"));
    }
    let sc = scan(&f, kinks, cfg.s, cfg.e, cfg.m_cap, cfg.k, cfg.delta, ErrorMetric::Max)?;
    if let Some(&i) = sc.forced.first() {
        return Err(ApproxError::BudgetUnmet {
            alpha: sc.breakpoints[i],
            beta: sc.breakpoints[i + 1],
            budget: cfg.delta,
        }
        .into());
    }
    let mut provenance = Provenance::new("nfgen");
    provenance.delta = Some(cfg.delta);
    Ok(PiecewisePoly::new(PiecewiseParts {
        function: function.to_string(),
        theta: Theta { m: cfg.m_cap, k: cfg.k, ring: cfg.ring },
        breakpoints: sc.breakpoints,
        pieces: sc.pieces,
        tail_left: tails.0,
        tail_right: tails.1,
        crude: None,
        provenance,
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::ActivationKind;
    use crate::approx::error_max;

    fn silu(x: f64) -> f64 {
        ActivationKind::Silu.eval_exact(x)
    }

    fn raw_tails() -> (TailPoly, TailPoly) {
        ActivationKind::Silu.tails().unwrap()
    }

    #[test]
    fn relu_values() {
        let r = relu_swap();
        assert_eq!(r.eval_real(-2.0), 0.0);
        assert_eq!(r.eval_real(3.0), 3.0);
        assert_eq!(r.eval_real(7.0), 7.0);
        assert_eq!(r.op_census().comp, 3);
    }

    #[test]
    fn mpcformer_values() {
        let q = mpcformer_gelu();
        assert_eq!(q.eval_real(0.0), 0.5);
        assert_eq!(q.eval_real(-2.0), 0.5);
        assert_eq!(q.eval_real(2.0), 1.5);
        assert_eq!(q.eval_real(6.0), 0.125 * 36.0 + 1.5 + 0.5);
    }

    #[test]
    fn minionn_linear_target_is_exact() {
        let cfg = MiniOnnConfig { n: 60, m: 4, k: 1, a: -5.0, b: 5.0 };
        let pp = minionn_approx(|x| 2.0 * x - 1.0, "lin", &cfg, raw_tails()).unwrap();
        assert_eq!(pp.breakpoints().len(), cfg.m + 2);
        for i in 0..=100 {
            let x = -5.0 + 0.1 * i as f64;
            assert!((pp.eval_real(x) - (2.0 * x - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn minionn_beats_single_global_fit() {
        let cfg = MiniOnnConfig { n: 300, ..Default::default() };
        let pp = minionn_approx(silu, "silu", &cfg, raw_tails()).unwrap();
        assert_eq!(pp.breakpoints().len(), cfg.m + 2);
        let xs: Vec<f64> = (0..300).map(|i| -5.0 + 10.0 * i as f64 / 299.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| silu(x)).collect();
        let global = polyfit(&xs, &ys, 3).0;
        let piecewise_max = (0..=10_000)
            .map(|i| {
                let x = -5.0 + 1e-3 * i as f64;
                (pp.eval_real(x) - silu(x)).abs()
            })
            .fold(0.0f64, f64::max);
        assert!(piecewise_max < error_max(silu, &global, -5.0, 5.0));
    }

    #[test]
    fn minionn_rejects_bad_config() {
        let cfg = MiniOnnConfig { n: 10, m: 8, ..Default::default() };
        assert!(minionn_approx(silu, "silu", &cfg, raw_tails()).is_err());
    }

    #[test]
    fn nfgen_pieces_meet_threshold() {
        let cfg = MaxErrorConfig { m_cap: 2000, ..Default::default() };
        let pp = nfgen_mode(silu, "silu", &[], &cfg, raw_tails()).unwrap();
        for (i, p) in pp.pieces().iter().enumerate() {
            let (a, b) = (pp.breakpoints()[i], pp.breakpoints()[i + 1]);
            assert!(error_max(silu, p, a, b) <= cfg.delta);
        }
        let huge =
            nfgen_mode(silu, "silu", &[], &MaxErrorConfig { delta: 1e3, m_cap: 100, ..cfg }, raw_tails()).unwrap();
        assert_eq!(huge.num_pieces(), 1);
        let loose = nfgen_mode(silu, "silu", &[], &MaxErrorConfig { delta: 1e-1, ..cfg }, raw_tails()).unwrap();
        assert!(loose.num_pieces() <= pp.num_pieces());
    }

    #[test]
    fn nfgen_unmeetable_budget() {
        let cfg = MaxErrorConfig { delta: 1e-9, k: 0, m_cap: 4, ..Default::default() };
        assert!(matches!(
            nfgen_mode(silu, "silu", &[], &cfg, raw_tails()),
            Err(BaselineError::Approx(ApproxError::BudgetUnmet { .. }))
        ));
    }
}
