//! Accuracy and cost evaluation of candidate approximations against a model
//! and its data.

use afapprox_core::activations::{ActivationKind, Target};
use afapprox_core::approx::{accuracy_loss, AccuracyEvaluator};
use afapprox_core::mpccost::{model_cost, time_estimate, CostReport, CostTable, NetworkProfile};
use afapprox_core::nn::{accuracy_fixed, accuracy_float, Dataset, ExampleMap, FixedModel, Model};
use afapprox_core::piecewise::PiecewisePoly;
use afapprox_core::search::TimeEvaluator;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Calibration subsample size for accuracy probes.
pub const DEFAULT_CALIBRATION: usize = 2048;

/// A cost report with its per-inference time split into terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostDoc {
    pub profile: NetworkProfile,
    pub table: CostTable,
    pub report: CostReport,
    pub rounds_term: f64,
    pub bandwidth_term: f64,
    pub compute_term: f64,
    /// Seconds per inference.
    pub time: f64,
}

pub fn cost_doc(report: CostReport, profile: &NetworkProfile, table: &CostTable) -> CostDoc {
    let batch = report.batch.max(1) as f64;
    CostDoc {
        profile: *profile,
        table: *table,
        rounds_term: report.rounds as f64 * profile.rtt / batch,
        bandwidth_term: report.bits as f64 / profile.bandwidth / batch,
        compute_term: report.local_ops as f64 * profile.cpu_per_op / batch,
        time: time_estimate(&report, profile),
        report,
    }
}

/// Example sweeps on a dedicated thread pool.
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    /// `jobs = None` uses every available core.
    pub fn new(jobs: Option<usize>) -> Result<Self> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = jobs {
            if n == 0 {
                return Err(Error::Usage("--jobs must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        let pool = b.build().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(Parallel { pool })
    }
}

impl ExampleMap for Parallel {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

/// `identity` or an activation name. The three smooth activations with a
/// crude component are approximated through their residual unless `exact`.
pub fn target_for(function: &str, exact: bool) -> Result<Target> {
    if function == "identity" {
        return Ok(Target::Identity);
    }
    let kind: ActivationKind = function.parse()?;
    if exact || !kind.has_crude() {
        Ok(Target::Exact(kind))
    } else {
        Ok(kind.residual_target()?)
    }
}

/// A model with its calibration data (for accuracy) and test split (for
/// the batch over which time is averaged).
pub struct Workload<'a, M> {
    pub model: &'a Model,
    pub calib: &'a Dataset,
    pub test: &'a Dataset,
    pub profile: NetworkProfile,
    pub table: CostTable,
    pub map: &'a M,
}

impl<M: ExampleMap> Workload<'_, M> {
    /// Plaintext accuracy with the exact activation on the calibration set.
    pub fn eta(&self) -> Result<f64> {
        Ok(accuracy_float(self.model, self.calib, None, self.map)?)
    }

    /// Fixed-point accuracy with `pp` on its own ring.
    pub fn eta_prime(&self, pp: &PiecewisePoly, data: &Dataset) -> Result<f64> {
        let fm = FixedModel::new(self.model, pp)?;
        Ok(accuracy_fixed(&fm, data, self.map)?)
    }

    pub fn loss(&self, pp: &PiecewisePoly) -> Result<f64> {
        Ok(accuracy_loss(self.eta()?, self.eta_prime(pp, self.calib)?))
    }

    /// Cost of secure inference over the whole test split.
    pub fn cost(&self, pp: &PiecewisePoly) -> Result<CostReport> {
        if self.test.is_empty() {
            return Err(afapprox_core::nn::NnError::EmptyDataset.into());
        }
        let fm = FixedModel::new(self.model, pp)?;
        Ok(model_cost(&fm, pp, self.test.len() as u64, &self.table, self.profile.parties))
    }

    /// Per-inference time estimate.
    pub fn time(&self, pp: &PiecewisePoly) -> Result<f64> {
        Ok(time_estimate(&self.cost(pp)?, &self.profile))
    }
}

impl<M: ExampleMap> AccuracyEvaluator for Workload<'_, M> {
    /// Unusable candidates (for example an approximation that cannot be
    /// encoded on its ring) count as zero accuracy.
    fn accuracy(&self, pp: &PiecewisePoly) -> f64 {
        self.eta_prime(pp, self.calib).unwrap_or(0.0)
    }
}

impl<M: ExampleMap> TimeEvaluator for Workload<'_, M> {
    fn time(&self, pp: &PiecewisePoly) -> f64 {
        Workload::time(self, pp).unwrap_or(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use afapprox_core::baselines::relu_swap;
    use afapprox_core::nn::{blobs, Sequential};
    use afapprox_core::nn::{train_fcn, TrainConfig};

    #[test]
    fn parallel_matches_sequential() {
        let p = Parallel::new(Some(3)).unwrap();
        assert_eq!(p.map(1000, |i| i * i), Sequential.map(1000, |i| i * i));
        assert!(Parallel::new(Some(0)).is_err());
    }

    #[test]
    fn targets() {
        assert_eq!(target_for("identity", false).unwrap(), Target::Identity);
        assert_eq!(target_for("silu", false).unwrap(), Target::Residual(ActivationKind::Silu));
        assert_eq!(target_for("silu", true).unwrap(), Target::Exact(ActivationKind::Silu));
        assert_eq!(target_for("tanh", false).unwrap(), Target::Exact(ActivationKind::Tanh));
        assert!(target_for("swish", false).is_err());
    }

    #[test]
    fn relu_model_with_relu_swap_is_lossless() {
        let (train, test) = blobs(600, 2, 2, 3).split(0.75);
        let mut cfg = TrainConfig::new(vec![8], ActivationKind::Relu);
        cfg.epochs = 5;
        let model = train_fcn(&train, &cfg).unwrap();
        let w = Workload {
            model: &model,
            calib: &train,
            test: &test,
            profile: NetworkProfile::default(),
            table: CostTable::three_party(),
            map: &Sequential,
        };
        assert!(w.loss(&relu_swap()).unwrap().abs() <= 1e-2);
        let t = w.time(&relu_swap()).unwrap();
        assert!(t > 0.0);
        let doc = cost_doc(w.cost(&relu_swap()).unwrap(), &w.profile, &w.table);
        assert!((doc.rounds_term + doc.bandwidth_term + doc.compute_term - t).abs() <= 1e-12 * t);
    }
}
