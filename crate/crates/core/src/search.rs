//! Simulated annealing over `theta = (m, k, ring)`: minimise the estimated
//! secure inference time subject to the accuracy-loss bound.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activations::Target;
use crate::approx::{gen_accurate_approx, AccuracyEvaluator, ApproxError, GenConfig, GenReport};
use crate::piecewise::PiecewisePoly;
use crate::ring::{RingSpec, RING_MENU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Theta {
    pub m: usize,
    pub k: usize,
    pub ring: RingSpec,
}

/// Ring scale divisors `gamma_2 in {1.5, 2, ..., 4}`, stored in halves.
pub const GAMMA_HALVES: [u32; 6] = [3, 4, 5, 6, 7, 8];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SAConfig {
    pub i_max: usize,
    pub chi0: f64,
    pub seed: u64,
    pub theta0: Theta,
    pub nu: f64,
}

impl Default for SAConfig {
    fn default() -> Self {
        SAConfig {
            i_max: 10,
            chi0: 0.2,
            seed: 0,
            theta0: Theta { m: 10_000, k: 10, ring: RingSpec::new(128, 64).expect("valid ring") },
            nu: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("no feasible candidate found")]
    NoFeasible,
    #[error("invalid search config: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Approx(#[from] ApproxError),
}

/// `T_i = chi0 / log10(1 + i)`.
pub fn cooling(i: usize, chi0: f64) -> f64 {
    chi0 / libm::log10(1.0 + i as f64)
}

/// `P(z) = 2^{-|z|} / 3`: zero with probability 1/3, otherwise a fair sign
/// and a geometric magnitude starting at 1.
pub fn sample_signed_geometric<R: Rng + ?Sized>(rng: &mut R) -> i64 {
    if rng.random_range(0..3u32) == 0 {
        return 0;
    }
    let negative = rng.random_bool(0.5);
    let mut mag = 1i64;
    while rng.random_bool(0.5) {
        mag += 1;
    }
    if negative {
        -mag
    } else {
        mag
    }
}

pub fn neighbour_ring<R: Rng + ?Sized>(rng: &mut R) -> RingSpec {
    let ell = RING_MENU[rng.random_range(0..RING_MENU.len())];
    let halves = GAMMA_HALVES[rng.random_range(0..GAMMA_HALVES.len())];
    let d = (2 * ell / halves).clamp(1, ell - 1);
    RingSpec::new(ell, d).expect("menu ring is valid")
}

pub fn generate_neighbour<R: Rng + ?Sized>(theta: &Theta, rng: &mut R) -> Theta {
    let z1 = sample_signed_geometric(rng);
    let z2 = sample_signed_geometric(rng);
    let m = (theta.m as i64 + z1).max(1) as usize;
    let k = (theta.k as i64 + z2).max(0) as usize;
    Theta { m, k, ring: neighbour_ring(rng) }
}

/// Estimated per-inference time of a model using a candidate approximation.
pub trait TimeEvaluator {
    fn time(&self, pp: &PiecewisePoly) -> f64;
}

impl<F: Fn(&PiecewisePoly) -> f64> TimeEvaluator for F {
    fn time(&self, pp: &PiecewisePoly) -> f64 {
        self(pp)
    }
}

/// One proposal of the walk. Iteration 0 is the initial point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchStep {
    pub iteration: usize,
    pub theta: Theta,
    pub feasible: bool,
    pub pieces: Option<usize>,
    pub time: Option<f64>,
    pub acc_loss: Option<f64>,
    pub temperature: Option<f64>,
    pub r: Option<f64>,
    pub accepted: bool,
    pub generation: GenReport,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchReport {
    pub seed: u64,
    pub eta: f64,
    pub steps: Vec<SearchStep>,
    pub best_iteration: usize,
    pub best_time: f64,
    /// `theta` of the walk's final state, which may differ from the best.
    pub final_theta: Theta,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: PiecewisePoly,
    pub theta: Theta,
    pub report: SearchReport,
}

/// Acceptance exponent scale: time differences are compared in
/// milliseconds against the temperature.
pub const PSI_PER_SECOND: f64 = 1e3;

/// Accept iff `exp(psi / T) > r` with `psi = (time_cur - time_new)` in ms.
pub fn accept_move(time_cur: f64, time_new: f64, temperature: f64, r: f64) -> bool {
    if !time_cur.is_finite() {
        return true;
    }
    let psi = (time_cur - time_new) * PSI_PER_SECOND;
    libm::exp(psi / temperature) > r
}

/// Runs the annealing walk from `sa.theta0`; returns the fastest feasible
/// candidate seen.
pub fn find_best_piecepoly<A, T>(
    target: &Target,
    gen: &GenConfig,
    sa: &SAConfig,
    acc: &A,
    time: &T,
    eta: f64,
) -> Result<SearchOutcome, SearchError>
where
    A: AccuracyEvaluator + ?Sized,
    T: TimeEvaluator + ?Sized,
{
    if sa.i_max == 0 {
        return Err(SearchError::Config("i_max must be at least 1"));
    }
    if !(sa.chi0 > 0.0) {
        return Err(SearchError::Config("chi0 must be positive"));
    }
    let gen = GenConfig { nu: sa.nu, ..gen.clone() };
    let mut steps = Vec::with_capacity(sa.i_max + 1);
    let mut best: Option<(PiecewisePoly, f64, usize)> = None;

    let (first, report0) = gen_accurate_approx(&sa.theta0, target, &gen, acc, eta)?;
    let mut cur_theta = sa.theta0;
    let mut cur_time = f64::INFINITY;
    let mut step0 = blank_step(0, sa.theta0, report0);
    if let Some(pp) = first {
        let t = time.time(&pp);
        fill_feasible(&mut step0, &pp, t);
        step0.accepted = true;
        cur_time = t;
        best = Some((pp, t, 0));
    }
    steps.push(step0);

    let mut rng = ChaCha8Rng::seed_from_u64(sa.seed);
    for i in 1..=sa.i_max {
        rng.set_stream(i as u64);
        rng.set_word_pos(0);
        let theta = generate_neighbour(&cur_theta, &mut rng);
        let temperature = cooling(i, sa.chi0);
        let (cand, report) = gen_accurate_approx(&theta, target, &gen, acc, eta)?;
        let mut step = blank_step(i, theta, report);
        step.temperature = Some(temperature);
        let Some(pp) = cand else {
            steps.push(step);
            continue;
        };
        let t = time.time(&pp);
        fill_feasible(&mut step, &pp, t);
        let r: f64 = rng.random();
        step.r = Some(r);
        if accept_move(cur_time, t, temperature, r) {
            step.accepted = true;
            cur_theta = theta;
            cur_time = t;
        }
        if best.as_ref().is_none_or(|(_, bt, _)| t < *bt) {
            best = Some((pp, t, i));
        }
        steps.push(step);
    }

    let (pp, best_time, best_iteration) = best.ok_or(SearchError::NoFeasible)?;
    let theta = pp.theta();
    Ok(SearchOutcome {
        best: pp,
        theta,
        report: SearchReport { seed: sa.seed, eta, steps, best_iteration, best_time, final_theta: cur_theta },
    })
}

fn blank_step(iteration: usize, theta: Theta, generation: GenReport) -> SearchStep {
    SearchStep {
        iteration,
        theta,
        feasible: false,
        pieces: None,
        time: None,
        acc_loss: None,
        temperature: None,
        r: None,
        accepted: false,
        generation,
    }
}

fn fill_feasible(step: &mut SearchStep, pp: &PiecewisePoly, t: f64) {
    step.feasible = true;
    step.pieces = Some(pp.num_pieces());
    step.time = Some(t);
    step.acc_loss = step
        .generation
        .accepted_delta
        .and_then(|d| step.generation.probes.iter().find(|p| p.delta == d))
        .and_then(|p| p.loss);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cooling_values() {
        assert!((cooling(1, 0.2) - 0.664).abs() < 1e-3);
        assert!((cooling(10, 0.2) - 0.192).abs() < 1e-3);
        assert!((cooling(1, 0.4) - 2.0 * cooling(1, 0.2)).abs() < 1e-15);
    }

    #[test]
    fn signed_geometric_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 1_000_000;
        let mut zero = 0usize;
        let mut one = 0usize;
        let mut neg = 0usize;
        for _ in 0..n {
            match sample_signed_geometric(&mut rng) {
                0 => zero += 1,
                1 => one += 1,
                z if z < 0 => neg += 1,
                _ => {}
            }
        }
        let p = |c: usize| c as f64 / n as f64;
        assert!((p(zero) - 1.0 / 3.0).abs() < 0.002);
        assert!((p(one) - 1.0 / 6.0).abs() < 0.002);
        assert!((p(neg) - 1.0 / 3.0).abs() < 0.002);
    }

    #[test]
    fn density_sums_to_one() {
        let total: f64 = (-60i32..=60).map(|z| libm::pow(2.0, -(z.abs() as f64)) / 3.0).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ring_fraction_bits() {
        assert_eq!(2 * 64 / 4, 32);
        assert_eq!(2 * 84 / 7, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            let r = neighbour_ring(&mut rng);
            let i = RING_MENU.iter().position(|&l| l == r.ell()).unwrap();
            counts[i] += 1;
            let ok = GAMMA_HALVES.iter().any(|&h| r.d() == 2 * r.ell() / h);
            assert!(ok && r.d() >= 1);
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn neighbour_clamps() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = Theta { m: 1, k: 0, ring: RingSpec::new(32, 16).unwrap() };
        for _ in 0..1000 {
            let n = generate_neighbour(&t, &mut rng);
            assert!(n.m >= 1);
        }
    }

    #[test]
    fn faster_always_accepted() {
        for r in [0.0, 0.3, 0.999_999] {
            assert!(accept_move(2e-3, 1e-3, 0.19, r));
            assert!(accept_move(f64::INFINITY, 5.0, 0.19, r));
        }
        assert!(!accept_move(1e-3, 1.0, 0.19, 0.5));
    }

    fn identity_search(seed: u64) -> SearchOutcome {
        let sa =
            SAConfig { seed, theta0: Theta { m: 4, k: 2, ring: RingSpec::new(64, 32).unwrap() }, ..Default::default() };
        let acc = |_: &PiecewisePoly| 1.0;
        let time = |pp: &PiecewisePoly| {
            let t = pp.theta();
            (t.ring.ell() as f64) * 1e-4 + pp.num_pieces() as f64 * 1e-3 + t.k as f64 * 1e-4
        };
        find_best_piecepoly(&Target::Identity, &GenConfig::default(), &sa, &acc, &time, 1.0).unwrap()
    }

    #[test]
    fn identity_search_never_regresses() {
        let out = identity_search(5);
        let t0 = out.report.steps[0].time.unwrap();
        assert!(out.report.best_time <= t0);
        for s in &out.report.steps {
            if let Some(t) = s.time {
                assert!(out.report.best_time <= t);
            }
        }
        assert_eq!(out.report.steps.len(), 11);
    }

    #[test]
    fn search_is_deterministic() {
        assert_eq!(identity_search(42).report, identity_search(42).report);
    }

    #[test]
    fn no_feasible_candidate() {
        let sa = SAConfig {
            i_max: 2,
            theta0: Theta { m: 2, k: 1, ring: RingSpec::new(64, 32).unwrap() },
            ..Default::default()
        };
        let acc = |_: &PiecewisePoly| 0.0;
        let time = |_: &PiecewisePoly| 1.0;
        let err = find_best_piecepoly(&Target::Identity, &GenConfig::default(), &sa, &acc, &time, 1.0);
        assert!(matches!(err, Err(SearchError::NoFeasible)));
    }
}
