//! Fully connected networks with batch normalization: float and fixed-point
//! forward passes, accuracy, a small trainer and synthetic datasets.

mod data;
mod fixed;
mod train;

use alloc::vec;
use alloc::vec::Vec;

use crate::activations::ActivationKind;
use crate::piecewise::PiecewisePoly;

pub use data::{blobs, rings};
pub use fixed::{FixedLayer, FixedModel};
pub use train::{train_fcn, TrainConfig};

pub const DEFAULT_BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("layer {layer}: {reason}")]
    Invalid { layer: usize, reason: &'static str },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("non-finite feature at row {0}")]
    NonFinite(usize),
    #[error("training diverged at epoch {0}")]
    Diverged(usize),
    #[error("invalid training setup: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// `y = W x + b` with `W` stored as `out` rows of `in` weights.
    Linear {
        w: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    BatchNorm {
        mean: Vec<f64>,
        var: Vec<f64>,
        gamma: Vec<f64>,
        beta: Vec<f64>,
        eps: f64,
    },
    Activation(ActivationKind),
}

impl Layer {
    /// Output width given the input width.
    fn out_dim(&self, input: usize) -> usize {
        match self {
            Layer::Linear { b, .. } => b.len(),
            _ => input,
        }
    }

    /// Input width this layer requires, if it fixes one.
    fn in_dim(&self) -> Option<usize> {
        match self {
            Layer::Linear { w, .. } => w.first().map(|r| r.len()),
            Layer::BatchNorm { mean, .. } => Some(mean.len()),
            Layer::Activation(_) => None,
        }
    }

    /// Per-unit `(scale, shift)` such that BN is `x * scale + shift`.
    pub fn bn_affine(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Layer::BatchNorm { mean, var, gamma, beta, eps } => {
                let scale: Vec<f64> = var.iter().zip(gamma).map(|(v, g)| g / libm::sqrt(v + eps)).collect();
                let shift = beta.iter().zip(mean).zip(&scale).map(|((b, m), s)| b - m * s).collect();
                Some((scale, shift))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelWarning {
    /// The activation at this layer index does not follow a batch norm, so
    /// its inputs need not be close to standard normal.
    ActivationWithoutBatchNorm(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub layers: Vec<Layer>,
    pub classes: usize,
}

impl Model {
    pub fn input_dim(&self) -> Option<usize> {
        self.layers.iter().find_map(|l| l.in_dim())
    }

    /// Checks dimensions and parameters; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<ModelWarning>, NnError> {
        let mut warnings = Vec::new();
        let mut width = self.input_dim();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Linear { w, b } => {
                    if w.len() != b.len() || w.is_empty() {
                        return Err(NnError::Invalid { layer: i, reason: "weight rows must match bias length" });
                    }
                    let cols = w[0].len();
                    if w.iter().any(|r| r.len() != cols) {
                        return Err(NnError::Invalid { layer: i, reason: "ragged weight matrix" });
                    }
                    if w.iter().flatten().chain(b).any(|v| !v.is_finite()) {
                        return Err(NnError::Invalid { layer: i, reason: "non-finite weight" });
                    }
                    check_width(width, cols)?;
                }
                Layer::BatchNorm { mean, var, gamma, beta, eps } => {
                    let n = mean.len();
                    if var.len() != n || gamma.len() != n || beta.len() != n {
                        return Err(NnError::Invalid { layer: i, reason: "batch norm vectors differ in length" });
                    }
                    if var.iter().any(|v| !(*v > 0.0)) {
                        return Err(NnError::Invalid { layer: i, reason: "variance must be positive" });
                    }
                    if !(*eps > 0.0) {
                        return Err(NnError::Invalid { layer: i, reason: "epsilon must be positive" });
                    }
                    check_width(width, n)?;
                }
                Layer::Activation(_) => {
                    if !matches!(i.checked_sub(1).map(|j| &self.layers[j]), Some(Layer::BatchNorm { .. })) {
                        warnings.push(ModelWarning::ActivationWithoutBatchNorm(i));
                    }
                }
            }
            width = width.map(|w| layer.out_dim(w)).or(match layer {
                Layer::Linear { b, .. } => Some(b.len()),
                _ => None,
            });
        }
        if let Some(w) = width {
            if self.layers.iter().any(|l| matches!(l, Layer::Linear { .. })) && w != self.classes {
                return Err(NnError::Dimension { expected: self.classes, got: w });
            }
        }
        Ok(warnings)
    }

    /// Float forward pass. With `act` set, every activation layer uses the
    /// approximation's real-valued evaluation instead of the exact function.
    pub fn forward_float(&self, x: &[f64], act: Option<&PiecewisePoly>) -> Result<Vec<f64>, NnError> {
        let mut cur = x.to_vec();
        for layer in &self.layers {
            cur = match layer {
                Layer::Linear { w, b } => {
                    if let Some(r) = w.first() {
                        if r.len() != cur.len() {
                            return Err(NnError::Dimension { expected: r.len(), got: cur.len() });
                        }
                    }
                    w.iter().zip(b).map(|(row, bi)| dot(row, &cur) + bi).collect()
                }
                Layer::BatchNorm { mean, var, gamma, beta, eps } => {
                    if mean.len() != cur.len() {
                        return Err(NnError::Dimension { expected: mean.len(), got: cur.len() });
                    }
                    (0..cur.len()).map(|j| (cur[j] - mean[j]) / libm::sqrt(var[j] + eps) * gamma[j] + beta[j]).collect()
                }
                Layer::Activation(kind) => match act {
                    Some(pp) => cur.iter().map(|&v| pp.eval_real(v)).collect(),
                    None => cur.iter().map(|&v| kind.eval_exact(v)).collect(),
                },
            };
        }
        Ok(cur)
    }

    pub fn predict_float(&self, x: &[f64], act: Option<&PiecewisePoly>) -> Result<usize, NnError> {
        Ok(argmax(&self.forward_float(x, act)?))
    }

    /// Pre-activation values at every activation layer, for checking the
    /// density assumption.
    pub fn pre_activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, NnError> {
        let mut out = Vec::new();
        let mut partial = Model { layers: Vec::new(), classes: self.classes };
        for layer in &self.layers {
            if matches!(layer, Layer::Activation(_)) {
                out.push(partial.forward_float(x, None)?);
            }
            partial.layers.push(layer.clone());
        }
        Ok(out)
    }

    /// Number of activation layers and the total number of activated units.
    pub fn activation_units(&self) -> (usize, usize) {
        let mut width = self.input_dim().unwrap_or(0);
        let mut layers = 0;
        let mut units = 0;
        for l in &self.layers {
            if matches!(l, Layer::Activation(_)) {
                layers += 1;
                units += width;
            }
            width = l.out_dim(width);
        }
        (layers, units)
    }

    pub fn activation_kind(&self) -> Option<ActivationKind> {
        self.layers.iter().find_map(|l| match l {
            Layer::Activation(k) => Some(*k),
            _ => None,
        })
    }
}

fn check_width(width: Option<usize>, want: usize) -> Result<(), NnError> {
    match width {
        Some(w) if w != want => Err(NnError::Dimension { expected: want, got: w }),
        _ => Ok(()),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub split: Split,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, classes: usize) -> Result<Self, NnError> {
        if features.len() != labels.len() {
            return Err(NnError::Dimension { expected: features.len(), got: labels.len() });
        }
        let dim = features.first().map_or(0, |r| r.len());
        for (i, (row, &label)) in features.iter().zip(&labels).enumerate() {
            if row.len() != dim {
                return Err(NnError::Dimension { expected: dim, got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(NnError::NonFinite(i));
            }
            if label >= classes {
                return Err(NnError::Label { label, classes });
            }
        }
        Ok(Dataset { features, labels, classes, split: Split::All })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, |r| r.len())
    }

    /// First `train_frac` of the rows as the training split, the rest as test.
    pub fn split(self, train_frac: f64) -> (Dataset, Dataset) {
        let cut = libm::round(self.len() as f64 * train_frac) as usize;
        let mut features = self.features;
        let mut labels = self.labels;
        let test_f = features.split_off(cut.min(features.len()));
        let test_l = labels.split_off(cut.min(labels.len()));
        (
            Dataset { features, labels, classes: self.classes, split: Split::Train },
            Dataset { features: test_f, labels: test_l, classes: self.classes, split: Split::Test },
        )
    }

    /// The first `n` rows (or all of them).
    pub fn head(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            features: self.features[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
            classes: self.classes,
            split: self.split,
        }
    }
}

/// Maps a function over example indices; lets the caller choose sequential
/// or parallel execution.
pub trait ExampleMap {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl ExampleMap for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

fn fraction(hits: &[bool]) -> f64 {
    hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64
}

/// `eta`: float accuracy, with the exact activation or an approximation.
pub fn accuracy_float<M: ExampleMap>(
    model: &Model,
    data: &Dataset,
    act: Option<&PiecewisePoly>,
    map: &M,
) -> Result<f64, NnError> {
    if data.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let hits: Vec<Result<bool, NnError>> =
        map.map(data.len(), |i| Ok(model.predict_float(&data.features[i], act)? == data.labels[i]));
    Ok(fraction(&hits.into_iter().collect::<Result<Vec<_>, _>>()?))
}

/// `eta'`: fixed-point accuracy.
pub fn accuracy_fixed<M: ExampleMap>(model: &FixedModel, data: &Dataset, map: &M) -> Result<f64, NnError> {
    if data.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let hits: Vec<Result<bool, NnError>> =
        map.map(data.len(), |i| Ok(model.predict(&data.features[i])? == data.labels[i]));
    Ok(fraction(&hits.into_iter().collect::<Result<Vec<_>, _>>()?))
}

/// Identity-width layer stack helper used in tests and examples.
pub fn identity_linear(n: usize) -> Layer {
    let w = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    Layer::Linear { w, b: vec![0.0; n] }
}
