use afapprox_core::approx::{accuracy_loss, GenConfig};
use afapprox_core::baselines::{minionn_approx, nfgen_mode, MaxErrorConfig, MiniOnnConfig};
use afapprox_core::piecewise::PiecewisePoly;
use afapprox_core::search::{find_best_piecepoly, SAConfig, SearchError};
use afapprox_core::{ActivationKind, RingSpec, Target, Theta};

/// Accuracy that degrades with the approximation's worst error on a grid,
/// and a time that grows with pieces, degree and ring width.
fn accuracy(pp: &PiecewisePoly) -> f64 {
    let worst = (0..=400)
        .map(|i| -4.0 + 8.0 * i as f64 / 400.0)
        .map(|x| (pp.eval_real(x) - ActivationKind::Silu.eval_exact(x)).abs())
        .fold(0.0, f64::max);
    0.9 - worst
}

fn time(pp: &PiecewisePoly) -> f64 {
    let t = pp.theta();
    1e-3 * (pp.num_pieces() as f64 + t.k as f64) * t.ring.ell() as f64 / 64.0
}

fn sa(seed: u64) -> SAConfig {
    SAConfig {
        seed,
        i_max: 6,
        theta0: Theta { m: 64, k: 6, ring: RingSpec::new(128, 64).unwrap() },
        ..SAConfig::default()
    }
}

#[test]
fn search_is_deterministic_and_feasible() {
    let target = Target::Residual(ActivationKind::Silu);
    let gen = GenConfig::default();
    let a = find_best_piecepoly(&target, &gen, &sa(3), &accuracy, &time, 0.9).unwrap();
    let b = find_best_piecepoly(&target, &gen, &sa(3), &accuracy, &time, 0.9).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.best, b.best);
    assert!(accuracy_loss(0.9, accuracy(&a.best)) <= 1e-2);
    let t0 = a.report.steps[0].time.unwrap();
    assert!(a.report.best_time <= t0);
    assert_eq!(a.report.steps.len(), 7);
}

#[test]
fn unreachable_accuracy_is_no_feasible() {
    let target = Target::Residual(ActivationKind::Silu);
    let never = |_: &PiecewisePoly| 0.0;
    let r = find_best_piecepoly(&target, &GenConfig::default(), &sa(1), &never, &time, 0.9);
    assert!(matches!(r, Err(SearchError::NoFeasible)));
}

#[test]
fn nfgen_pieces_shrink_as_delta_grows() {
    let silu = |x: f64| ActivationKind::Silu.eval_exact(x);
    let tails = ActivationKind::Silu.tails().unwrap();
    let counts: Vec<usize> = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1]
        .iter()
        .map(|&delta| {
            let cfg = MaxErrorConfig { delta, k: 4, ..MaxErrorConfig::default() };
            nfgen_mode(silu, "silu", &[], &cfg, tails.clone()).unwrap().num_pieces()
        })
        .collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{counts:?}");
    assert!(counts[0] > counts[4]);
}

#[test]
fn minionn_is_deterministic_and_beats_global_cubic() {
    let silu = |x: f64| ActivationKind::Silu.eval_exact(x);
    let tails = ActivationKind::Silu.tails().unwrap();
    let cfg = MiniOnnConfig { n: 200, m: 6, ..MiniOnnConfig::default() };
    let a = minionn_approx(silu, "silu", &cfg, tails.clone()).unwrap();
    let b = minionn_approx(silu, "silu", &cfg, tails.clone()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.breakpoints().len(), cfg.m + 2);
    let global = minionn_approx(silu, "silu", &MiniOnnConfig { n: 200, m: 0, ..cfg }, tails).unwrap();
    let max_err = |pp: &PiecewisePoly| {
        (0..=1000)
            .map(|i| -5.0 + 10.0 * i as f64 / 1000.0)
            .map(|x| (pp.eval_real(x) - silu(x)).abs())
            .fold(0.0, f64::max)
    };
    assert!(max_err(&a) < max_err(&global));
}
