//! Mini-batch SGD with momentum for `Linear -> BatchNorm -> Activation`
//! stacks. Batch norm trains on batch statistics without affine terms; after
//! training, population statistics are recomputed exactly over the training
//! set, layer by layer.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Dataset, Layer, Model, NnError, DEFAULT_BN_EPS};
use crate::activations::ActivationKind;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub activation: ActivationKind,
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(hidden: Vec<usize>, activation: ActivationKind) -> Self {
        TrainConfig { hidden, activation, epochs: 30, lr: 0.05, momentum: 0.9, batch_size: 32, seed: 0 }
    }
}

struct Dense {
    w: Vec<f64>,
    b: Vec<f64>,
    vw: Vec<f64>,
    vb: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Dense {
    fn new<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let std = libm::sqrt(2.0 / cols as f64);
        let normal = Normal::new(0.0, std).expect("positive std");
        Dense {
            w: (0..rows * cols).map(|_| normal.sample(rng)).collect(),
            b: vec![0.0; rows],
            vw: vec![0.0; rows * cols],
            vb: vec![0.0; rows],
            rows,
            cols,
        }
    }

    /// `x` is `n x cols`, result `n x rows`.
    fn forward(&self, x: &[f64], n: usize) -> Vec<f64> {
        let mut y = vec![0.0; n * self.rows];
        for e in 0..n {
            let xe = &x[e * self.cols..(e + 1) * self.cols];
            for r in 0..self.rows {
                let wr = &self.w[r * self.cols..(r + 1) * self.cols];
                y[e * self.rows + r] = super::dot(wr, xe) + self.b[r];
            }
        }
        y
    }
}

struct BnCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

fn batch_norm(x: &[f64], n: usize, d: usize) -> (Vec<f64>, BnCache) {
    let mut mean = vec![0.0; d];
    let mut var = vec![0.0; d];
    for e in 0..n {
        for j in 0..d {
            mean[j] += x[e * d + j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    for e in 0..n {
        for j in 0..d {
            let z = x[e * d + j] - mean[j];
            var[j] += z * z;
        }
    }
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / libm::sqrt(v / n as f64 + DEFAULT_BN_EPS)).collect();
    let xhat: Vec<f64> = (0..n * d).map(|i| (x[i] - mean[i % d]) * inv_std[i % d]).collect();
    (xhat.clone(), BnCache { xhat, inv_std })
}

fn batch_norm_backward(dy: &[f64], c: &BnCache, n: usize, d: usize) -> Vec<f64> {
    let mut sum_dy = vec![0.0; d];
    let mut sum_dy_xhat = vec![0.0; d];
    for i in 0..n * d {
        sum_dy[i % d] += dy[i];
        sum_dy_xhat[i % d] += dy[i] * c.xhat[i];
    }
    let nf = n as f64;
    (0..n * d)
        .map(|i| {
            let j = i % d;
            c.inv_std[j] / nf * (nf * dy[i] - sum_dy[j] - c.xhat[i] * sum_dy_xhat[j])
        })
        .collect()
}

/// Trains `D -> hidden... -> classes` with a batch norm and activation after
/// every hidden linear layer. Deterministic for a fixed seed.
pub fn train_fcn(data: &Dataset, cfg: &TrainConfig) -> Result<Model, NnError> {
    if data.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    if cfg.batch_size < 2 || cfg.epochs == 0 || !(cfg.lr > 0.0) {
        return Err(NnError::Config("need batch_size >= 2, epochs >= 1 and lr > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dims = vec![data.dim()];
    dims.extend(&cfg.hidden);
    dims.push(data.classes);
    let mut dense: Vec<Dense> = dims.windows(2).map(|w| Dense::new(w[1], w[0], &mut rng)).collect();
    let hidden = cfg.hidden.len();
    let act = cfg.activation;

    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let x: Vec<f64> = chunk.iter().flat_map(|&i| data.features[i].iter().copied()).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| data.labels[i]).collect();
            let (loss, grads) = gradients(&dense, hidden, act, &x, &labels, data.classes);
            epoch_loss += loss;
            for (layer, (gw, gb)) in dense.iter_mut().zip(grads) {
                for (i, g) in gw.iter().enumerate() {
                    layer.vw[i] = cfg.momentum * layer.vw[i] - cfg.lr * g;
                    layer.w[i] += layer.vw[i];
                }
                for (r, g) in gb.iter().enumerate() {
                    layer.vb[r] = cfg.momentum * layer.vb[r] - cfg.lr * g;
                    layer.b[r] += layer.vb[r];
                }
            }
        }
        let finite = epoch_loss.is_finite() && dense.iter().all(|d| d.w.iter().chain(&d.b).all(|v| v.is_finite()));
        if !finite {
            return Err(NnError::Diverged(epoch));
        }
    }
    Ok(assemble(&dense, hidden, act, data))
}

/// Weight and bias gradients of one dense layer.
type DenseGrad = (Vec<f64>, Vec<f64>);

/// Mean cross-entropy of one batch and its gradient for every dense layer.
fn gradients(
    dense: &[Dense],
    hidden: usize,
    act: ActivationKind,
    x0: &[f64],
    labels: &[usize],
    classes: usize,
) -> (f64, Vec<DenseGrad>) {
    let n = labels.len();
    let mut inputs = Vec::with_capacity(dense.len());
    let mut bn = Vec::with_capacity(hidden);
    let mut pre_act = Vec::with_capacity(hidden);
    let mut cur = x0.to_vec();
    for (li, layer) in dense.iter().enumerate() {
        let y = layer.forward(&cur, n);
        inputs.push(core::mem::take(&mut cur));
        if li < hidden {
            let (z, cache) = batch_norm(&y, n, layer.rows);
            cur = z.iter().map(|&v| act.eval_exact(v)).collect();
            pre_act.push(z);
            bn.push(cache);
        } else {
            cur = y;
        }
    }

    let c = classes;
    let mut loss = 0.0;
    let mut grad = vec![0.0; n * c];
    for (e, &label) in labels.iter().enumerate() {
        let logits = &cur[e * c..(e + 1) * c];
        let mx = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&v| libm::exp(v - mx)).collect();
        let sum: f64 = exps.iter().sum();
        loss -= ln_floor(exps[label] / sum);
        for k in 0..c {
            let p = exps[k] / sum;
            grad[e * c + k] = (p - if k == label { 1.0 } else { 0.0 }) / n as f64;
        }
    }

    let mut out = vec![(Vec::new(), Vec::new()); dense.len()];
    for li in (0..dense.len()).rev() {
        if li < hidden {
            for (g, &zv) in grad.iter_mut().zip(&pre_act[li]) {
                *g *= act.derivative(zv);
            }
            grad = batch_norm_backward(&grad, &bn[li], n, dense[li].rows);
        }
        let layer = &dense[li];
        let x = &inputs[li];
        let (rows, cols) = (layer.rows, layer.cols);
        let mut gw = vec![0.0; rows * cols];
        let mut gb = vec![0.0; rows];
        let mut gx = vec![0.0; n * cols];
        for e in 0..n {
            for r in 0..rows {
                let g = grad[e * rows + r];
                gb[r] += g;
                for k in 0..cols {
                    gw[r * cols + k] += g * x[e * cols + k];
                    gx[e * cols + k] += g * layer.w[r * cols + k];
                }
            }
        }
        out[li] = (gw, gb);
        grad = gx;
    }
    (loss / n as f64, out)
}

fn ln_floor(p: f64) -> f64 {
    if p.is_nan() {
        return p;
    }
    libm::log(p.max(1e-300))
}

/// Builds the inference model with population statistics measured on the
/// full training set.
fn assemble(dense: &[Dense], hidden: usize, act: ActivationKind, data: &Dataset) -> Model {
    let n = data.len();
    let mut layers = Vec::new();
    let mut cur: Vec<f64> = data.features.iter().flatten().copied().collect();
    for (li, d) in dense.iter().enumerate() {
        layers.push(Layer::Linear {
            w: (0..d.rows).map(|r| d.w[r * d.cols..(r + 1) * d.cols].to_vec()).collect(),
            b: d.b.clone(),
        });
        let y = d.forward(&cur, n);
        if li < hidden {
            let k = d.rows;
            let mut mean = vec![0.0; k];
            let mut var = vec![0.0; k];
            for e in 0..n {
                for j in 0..k {
                    mean[j] += y[e * k + j];
                }
            }
            mean.iter_mut().for_each(|m| *m /= n as f64);
            for e in 0..n {
                for j in 0..k {
                    let z = y[e * k + j] - mean[j];
                    var[j] += z * z;
                }
            }
            var.iter_mut().for_each(|v| *v = (*v / n as f64).max(1e-12));
            cur = (0..n * k)
                .map(|i| act.eval_exact((y[i] - mean[i % k]) / libm::sqrt(var[i % k] + DEFAULT_BN_EPS)))
                .collect();
            layers.push(Layer::BatchNorm { mean, var, gamma: vec![1.0; k], beta: vec![0.0; k], eps: DEFAULT_BN_EPS });
            layers.push(Layer::Activation(act));
        } else {
            cur = y;
        }
    }
    Model { layers, classes: data.classes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{accuracy_float, blobs, Sequential};

    #[test]
    fn blobs_one_hidden_layer() {
        let (train, test) = blobs(1200, 4, 3, 11).split(0.75);
        let mut cfg = TrainConfig::new(vec![16], ActivationKind::Silu);
        cfg.epochs = 10;
        cfg.seed = 5;
        let model = train_fcn(&train, &cfg).unwrap();
        assert!(model.validate().unwrap().is_empty());
        let acc = accuracy_float(&model, &test, None, &Sequential).unwrap();
        assert!(acc >= 0.95, "{acc}");
    }

    #[test]
    fn deterministic_under_seed() {
        let data = blobs(200, 2, 2, 1);
        let mut cfg = TrainConfig::new(vec![4], ActivationKind::Mish);
        cfg.epochs = 2;
        assert_eq!(train_fcn(&data, &cfg).unwrap(), train_fcn(&data, &cfg).unwrap());
    }

    #[test]
    fn divergence_reported() {
        let mut data = blobs(200, 2, 2, 1);
        data.features.iter_mut().flatten().for_each(|v| *v *= 1e10);
        let mut cfg = TrainConfig::new(vec![], ActivationKind::Silu);
        cfg.lr = f64::MAX;
        cfg.epochs = 3;
        assert!(matches!(train_fcn(&data, &cfg), Err(NnError::Diverged(_))));
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let data = blobs(8, 3, 2, 4);
        let x: Vec<f64> = data.features.iter().flatten().copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut dense: Vec<Dense> =
            [(3usize, 3usize), (2, 3)].iter().map(|&(r, c)| Dense::new(r, c, &mut rng)).collect();
        let act = ActivationKind::Gelu;
        let (_, grads) = gradients(&dense, 1, act, &x, &data.labels, 2);
        let h = 1e-6;
        for (li, idx) in [(0usize, 4usize), (0, 0), (1, 5)] {
            dense[li].w[idx] += h;
            let (up, _) = gradients(&dense, 1, act, &x, &data.labels, 2);
            dense[li].w[idx] -= 2.0 * h;
            let (down, _) = gradients(&dense, 1, act, &x, &data.labels, 2);
            dense[li].w[idx] += h;
            let fd = (up - down) / (2.0 * h);
            let g = grads[li].0[idx];
            assert!((fd - g).abs() < 1e-6 * (1.0 + g.abs()), "layer {li} w{idx}: {fd} vs {g}");
        }
    }
}
