//! Fixed-point forward pass on one ring. Batch norm is folded offline into a
//! per-unit affine map; every dot product accumulates at double width and
//! truncates once. Biases and shifts enter the accumulator at double scale,
//! so they add no rounding of their own.

use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{argmax, Layer, Model, NnError};
use crate::piecewise::{CompiledPoly, PiecewisePoly};
use crate::ring::{raw, RingSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixedLayer {
    /// Row-major `rows x cols` encoded weights; biases split as by
    /// [`RingSpec::encode_split`].
    Linear {
        w: Vec<u128>,
        b: Vec<(u128, u128)>,
        rows: usize,
        cols: usize,
    },
    /// `x * scale + shift` per unit.
    Affine {
        scale: Vec<u128>,
        shift: Vec<(u128, u128)>,
    },
    Activation(CompiledPoly),
}

/// `sum w_i x_i + c`, truncated once; `c` is split as by
/// [`RingSpec::encode_split`].
pub fn affine_unit(spec: &RingSpec, w: &[u128], x: &[u128], c: (u128, u128)) -> u128 {
    let n = w.len();
    let one = spec.one_raw();
    raw::dot_trunc(
        spec,
        n + 2,
        |i| match i.cmp(&n) {
            Ordering::Less => w[i],
            Ordering::Equal => c.0,
            Ordering::Greater => c.1,
        },
        |i| match i.cmp(&n) {
            Ordering::Less => x[i],
            Ordering::Equal => one,
            Ordering::Greater => 1,
        },
    )
}

impl FixedLayer {
    /// Applies a linear or affine layer to one example. Activation layers
    /// are applied by their compiled program instead.
    pub fn apply_arith(&self, spec: &RingSpec, x: &[u128]) -> Option<Vec<u128>> {
        match self {
            FixedLayer::Linear { w, b, rows, cols } => {
                Some((0..*rows).map(|r| affine_unit(spec, &w[r * cols..(r + 1) * cols], x, b[r])).collect())
            }
            FixedLayer::Affine { scale, shift } => {
                Some(x.iter().enumerate().map(|(j, &v)| affine_unit(spec, &scale[j..=j], &[v], shift[j])).collect())
            }
            FixedLayer::Activation(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedModel {
    spec: RingSpec,
    input_dim: Option<usize>,
    layers: Vec<FixedLayer>,
}

impl FixedModel {
    /// Encodes `model` on the approximation's ring; every activation layer
    /// is replaced by `pp`.
    pub fn new(model: &Model, pp: &PiecewisePoly) -> Result<Self, NnError> {
        model.validate()?;
        let spec = pp.theta().ring;
        let enc = |v: f64| spec.encode_raw(v).unwrap_or(0);
        let split = |v: f64| spec.encode_split(v).unwrap_or((0, 0));
        let plan = pp.compile(spec);
        let layers = model
            .layers
            .iter()
            .map(|l| match l {
                Layer::Linear { w, b } => FixedLayer::Linear {
                    w: w.iter().flatten().map(|&v| enc(v)).collect(),
                    b: b.iter().map(|&v| split(v)).collect(),
                    rows: w.len(),
                    cols: w.first().map_or(0, |r| r.len()),
                },
                Layer::BatchNorm { .. } => {
                    let (scale, shift) = l.bn_affine().expect("batch norm layer");
                    FixedLayer::Affine {
                        scale: scale.iter().map(|&v| enc(v)).collect(),
                        shift: shift.iter().map(|&v| split(v)).collect(),
                    }
                }
                Layer::Activation(_) => FixedLayer::Activation(plan.clone()),
            })
            .collect();
        Ok(FixedModel { spec, input_dim: model.input_dim(), layers })
    }

    pub fn spec(&self) -> RingSpec {
        self.spec
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.input_dim
    }

    pub fn layers(&self) -> &[FixedLayer] {
        &self.layers
    }

    /// Output residues for one input.
    pub fn forward_raw(&self, x: &[f64]) -> Result<Vec<u128>, NnError> {
        if let Some(d) = self.input_dim {
            if d != x.len() {
                return Err(NnError::Dimension { expected: d, got: x.len() });
            }
        }
        let spec = &self.spec;
        let mut cur: Vec<u128> = x.iter().map(|&v| spec.encode_raw(v).unwrap_or(0)).collect();
        for layer in &self.layers {
            cur = match layer {
                FixedLayer::Activation(plan) => cur.iter().map(|&v| plan.eval_raw(v)).collect(),
                arith => arith.apply_arith(spec, &cur).expect("linear or affine layer"),
            };
        }
        Ok(cur)
    }

    /// Decoded logits.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        let scale = self.spec.scale();
        Ok(self.forward_raw(x)?.iter().map(|&r| self.spec.signed(r) as f64 / scale).collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize, NnError> {
        let out = self.forward_raw(x)?;
        let signed: Vec<i128> = out.iter().map(|&r| self.spec.signed(r)).collect();
        Ok(argmax(&signed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::ActivationKind;
    use crate::nn::{identity_linear, DEFAULT_BN_EPS};
    use crate::piecewise::{PiecewiseParts, Provenance, TailPoly};
    use crate::search::Theta;
    use alloc::vec;
    use proptest::prelude::*;

    fn relu_pp(spec: RingSpec) -> PiecewisePoly {
        PiecewisePoly::new(PiecewiseParts {
            function: "relu".into(),
            theta: Theta { m: 2, k: 1, ring: spec },
            breakpoints: vec![-5.0, 0.0, 5.0],
            pieces: vec![vec![0.0], vec![0.0, 1.0]],
            tail_left: TailPoly::linear(0.0, 0.0),
            tail_right: TailPoly::linear(0.0, 1.0),
            crude: None,
            provenance: Provenance::new("test"),
        })
        .unwrap()
    }

    #[test]
    fn zero_input_zero_logits() {
        let spec = RingSpec::new(64, 24).unwrap();
        let model = Model {
            layers: vec![
                Layer::Linear { w: vec![vec![0.3, -1.2], vec![2.0, 0.5]], b: vec![0.0, 0.0] },
                Layer::Activation(ActivationKind::Relu),
                Layer::Linear { w: vec![vec![1.0, 1.0]], b: vec![0.0] },
            ],
            classes: 1,
        };
        let fm = FixedModel::new(&model, &relu_pp(spec)).unwrap();
        assert!(fm.forward_raw(&[0.0, 0.0]).unwrap().iter().all(|&v| v == 0));
    }

    #[test]
    fn overflow_flips_predictions_on_small_ring() {
        // logits around 30 * 40 = 1200 overflow a ring with 5 integer bits
        let model =
            Model { layers: vec![Layer::Linear { w: vec![vec![40.0], vec![-40.0]], b: vec![0.0, 0.0] }], classes: 2 };
        let wide = FixedModel::new(&model, &relu_pp(RingSpec::new(128, 64).unwrap())).unwrap();
        let tiny = FixedModel::new(&model, &relu_pp(RingSpec::new(32, 26).unwrap())).unwrap();
        let x = [30.0];
        assert_eq!(wide.predict(&x).unwrap(), model.predict_float(&x, None).unwrap());
        assert_ne!(tiny.predict(&x).unwrap(), wide.predict(&x).unwrap());
    }

    proptest! {
        #[test]
        fn folded_batch_norm_matches_float(
            mean in -3.0f64..3.0, var in 0.05f64..5.0, gamma in 0.2f64..2.0, beta in -1.0f64..1.0,
            x in -20.0f64..20.0, d in 12u32..40,
        ) {
            let spec = RingSpec::new(64, d).unwrap();
            let model = Model {
                layers: vec![
                    identity_linear(1),
                    Layer::BatchNorm { mean: vec![mean], var: vec![var], gamma: vec![gamma], beta: vec![beta], eps: DEFAULT_BN_EPS },
                ],
                classes: 1,
            };
            let fm = FixedModel::new(&model, &relu_pp(spec)).unwrap();
            let bn_only = FixedModel { spec, input_dim: Some(1), layers: fm.layers[1..].to_vec() };
            let xq = spec.signed(spec.encode_raw(x).unwrap()) as f64 / spec.scale();
            let got = bn_only.forward(&[xq]).unwrap()[0];
            let want = model.forward_float(&[xq], None).unwrap()[0];
            let ulp = 1.0 / spec.scale();
            // half an ulp from encoding the scale (times |x|), under one from
            // the truncation, 2^-2d from the shift
            prop_assert!((got - want).abs() <= ulp * (1.0 + xq.abs()), "{} {}", got, want);
        }
    }
}
