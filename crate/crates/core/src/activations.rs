//! Activation functions: exact evaluators, the crude MPC-friendly stand-ins
//! for SiLU/GeLU/Mish, and the residual targets the generator approximates.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use crate::piecewise::TailPoly;

const GELU_SIGMOID_SCALE: f64 = 1.702;
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ActivationKind {
    Silu,
    /// Sigmoid form `x * sigmoid(1.702 x)`.
    Gelu,
    /// Tanh form `0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))`.
    GeluExact,
    Mish,
    Relu,
    Sigmoid,
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ActivationError {
    #[error("activation `{0}` has no crude approximation")]
    NoCrude(ActivationKind),
    #[error("unknown activation name `{0}`")]
    UnknownName(String),
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 7] = [
        ActivationKind::Silu,
        ActivationKind::Gelu,
        ActivationKind::GeluExact,
        ActivationKind::Mish,
        ActivationKind::Relu,
        ActivationKind::Sigmoid,
        ActivationKind::Tanh,
    ];

    /// The three complex activations with crude forms and linear tails.
    pub const COMPLEX: [ActivationKind; 3] = [ActivationKind::Silu, ActivationKind::Gelu, ActivationKind::Mish];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Silu => "silu",
            ActivationKind::Gelu => "gelu",
            ActivationKind::GeluExact => "gelu_exact",
            ActivationKind::Mish => "mish",
            ActivationKind::Relu => "relu",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
        }
    }

    pub fn has_crude(self) -> bool {
        matches!(self, ActivationKind::Silu | ActivationKind::Gelu | ActivationKind::Mish)
    }

    pub fn eval_exact(self, x: f64) -> f64 {
        match self {
            ActivationKind::Silu => x * sigmoid(x),
            ActivationKind::Gelu => x * sigmoid(GELU_SIGMOID_SCALE * x),
            ActivationKind::GeluExact => 0.5 * x * (1.0 + libm::tanh(SQRT_2_OVER_PI * (x + 0.044715 * x * x * x))),
            ActivationKind::Mish => x * libm::tanh(softplus(x)),
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::Sigmoid => sigmoid(x),
            ActivationKind::Tanh => libm::tanh(x),
        }
    }

    /// First derivative, used by the trainer.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ActivationKind::Silu => {
                let s = sigmoid(x);
                s + x * s * (1.0 - s)
            }
            ActivationKind::Gelu => {
                let s = sigmoid(GELU_SIGMOID_SCALE * x);
                s + GELU_SIGMOID_SCALE * x * s * (1.0 - s)
            }
            ActivationKind::GeluExact => {
                let inner = SQRT_2_OVER_PI * (x + 0.044715 * x * x * x);
                let t = libm::tanh(inner);
                let dinner = SQRT_2_OVER_PI * (1.0 + 3.0 * 0.044715 * x * x);
                0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner
            }
            ActivationKind::Mish => {
                let t = libm::tanh(softplus(x));
                t + x * (1.0 - t * t) * sigmoid(x)
            }
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            ActivationKind::Tanh => {
                let t = libm::tanh(x);
                1.0 - t * t
            }
        }
    }

    /// Crude MPC-friendly approximation:
    /// SiLU `x * max(0, min(6x + 0.5, 1))`, GeLU `x * max(0, min(10x, 0.5))`,
    /// Mish `max(0, x)`.
    pub fn eval_crude(self, x: f64) -> Result<f64, ActivationError> {
        match self {
            ActivationKind::Silu => Ok(x * (6.0 * x + 0.5).clamp(0.0, 1.0)),
            ActivationKind::Gelu => Ok(x * (10.0 * x).clamp(0.0, 0.5)),
            ActivationKind::Mish => Ok(x.max(0.0)),
            other => Err(ActivationError::NoCrude(other)),
        }
    }

    /// Abscissas where the crude function has a derivative jump.
    pub fn crude_kinks(self) -> &'static [f64] {
        match self {
            ActivationKind::Silu => &[-1.0 / 12.0, 1.0 / 12.0],
            ActivationKind::Gelu => &[0.0, 0.05],
            ActivationKind::Mish => &[0.0],
            _ => &[],
        }
    }

    /// Abscissas where the exact function itself has a derivative jump.
    pub fn exact_kinks(self) -> &'static [f64] {
        match self {
            ActivationKind::Relu => &[0.0],
            _ => &[],
        }
    }

    /// Linear tails `p_0` (left of `s`) and `p_{m+1}` (right of `e`) for the
    /// raw function. Defined for functions that saturate to 0 on the left and
    /// to `x` on the right.
    pub fn tails(self) -> Option<(TailPoly, TailPoly)> {
        match self {
            ActivationKind::Silu
            | ActivationKind::Gelu
            | ActivationKind::GeluExact
            | ActivationKind::Mish
            | ActivationKind::Relu => Some((TailPoly::linear(0.0, 0.0), TailPoly::linear(0.0, 1.0))),
            ActivationKind::Sigmoid => Some((TailPoly::linear(0.0, 0.0), TailPoly::linear(1.0, 0.0))),
            ActivationKind::Tanh => Some((TailPoly::linear(-1.0, 0.0), TailPoly::linear(1.0, 0.0))),
        }
    }

    /// Slope of the crude function for `x` to the right of all kinks.
    fn crude_right_slope(self) -> f64 {
        match self {
            ActivationKind::Gelu => 0.5,
            _ => 1.0,
        }
    }

    pub fn residual_target(self) -> Result<Target, ActivationError> {
        if self.has_crude() {
            Ok(Target::Residual(self))
        } else {
            Err(ActivationError::NoCrude(self))
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = ActivationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActivationKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| ActivationError::UnknownName(s.into()))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}

/// A scalar function to approximate over `[s, e]`, together with the tails
/// that take over outside it and the crude component added back at
/// evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// The activation itself.
    Exact(ActivationKind),
    /// `F_act(x) - F_crude(x)`; the final approximation is crude + fitted residual.
    Residual(ActivationKind),
    /// `f(x) = x`, used for sanity checks.
    Identity,
}

impl Target {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Target::Exact(k) => k.eval_exact(x),
            Target::Residual(k) => k.eval_exact(x) - k.eval_crude(x).unwrap_or(0.0),
            Target::Identity => x,
        }
    }

    /// Tails of the function being fitted (the residual, not the sum, for
    /// [`Target::Residual`]).
    pub fn tails(&self) -> (TailPoly, TailPoly) {
        match *self {
            Target::Exact(k) => k.tails().unwrap_or((TailPoly::linear(0.0, 0.0), TailPoly::linear(0.0, 0.0))),
            Target::Residual(k) => (TailPoly::linear(0.0, 0.0), TailPoly::linear(0.0, 1.0 - k.crude_right_slope())),
            Target::Identity => (TailPoly::linear(0.0, 1.0), TailPoly::linear(0.0, 1.0)),
        }
    }

    pub fn crude(&self) -> Option<ActivationKind> {
        match *self {
            Target::Residual(k) => Some(k),
            _ => None,
        }
    }

    /// Points where the target is not smooth; quadrature splits there.
    pub fn kinks(&self) -> &'static [f64] {
        match *self {
            Target::Exact(k) => k.exact_kinks(),
            Target::Residual(k) => k.crude_kinks(),
            Target::Identity => &[],
        }
    }

    pub fn function_name(&self) -> &'static str {
        match *self {
            Target::Exact(k) | Target::Residual(k) => k.name(),
            Target::Identity => "identity",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64)
    }

    #[test]
    fn exact_values_at_zero() {
        assert_eq!(ActivationKind::Silu.eval_exact(0.0), 0.0);
        assert_eq!(ActivationKind::Mish.eval_exact(0.0), 0.0);
        assert_eq!(ActivationKind::Sigmoid.eval_exact(0.0), 0.5);
    }

    #[test]
    fn exact_values_against_high_precision() {
        // 50-digit mpmath evaluations.
        let cases = [
            (ActivationKind::Gelu, 3.0, 2.981_928_690_292_214),
            (ActivationKind::Silu, 5.0, 4.966_535_745_378_576),
            (ActivationKind::Mish, 1.0, 0.865_098_388_267_310_3),
            (ActivationKind::GeluExact, 1.0, 0.841_191_990_608_276_7),
        ];
        for (k, x, want) in cases {
            let got = k.eval_exact(x);
            assert!((got - want).abs() < 1e-14, "{k}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn crude_examples() {
        assert_eq!(ActivationKind::Silu.eval_crude(1.0).unwrap(), 1.0);
        assert_eq!(ActivationKind::Silu.eval_crude(-1.0).unwrap(), 0.0);
        assert_eq!(ActivationKind::Gelu.eval_crude(1.0).unwrap(), 0.5);
        assert_eq!(ActivationKind::Mish.eval_crude(-3.0).unwrap(), 0.0);
        assert_eq!(ActivationKind::Relu.eval_crude(1.0), Err(ActivationError::NoCrude(ActivationKind::Relu)));
    }

    #[test]
    fn residual_examples() {
        let silu = ActivationKind::Silu.residual_target().unwrap();
        // 5 * sigmoid(5) - 5 from mpmath.
        assert!((silu.eval(5.0) - (-0.033_464_254_621_424_28)).abs() < 1e-14);
        let gelu = ActivationKind::Gelu.residual_target().unwrap();
        assert_eq!(gelu.tails().1.eval(6.0), 3.0);
        assert_eq!(ActivationKind::Mish.residual_target().unwrap().eval(0.0), 0.0);
        assert!(ActivationKind::Tanh.residual_target().is_err());
    }

    #[test]
    fn saturating_tails() {
        for x in grid(-40.0, -5.0, 20_000) {
            assert!(ActivationKind::Silu.eval_exact(x).abs() <= 0.04);
            assert!(ActivationKind::Mish.eval_exact(x).abs() <= 0.04);
        }
        for x in grid(5.0, 40.0, 20_000) {
            assert!((ActivationKind::Silu.eval_exact(x) - x).abs() <= 0.04);
        }
    }

    #[test]
    fn crude_shape() {
        for x in grid(-10.0, -1.0 / 12.0, 10_000) {
            assert_eq!(ActivationKind::Silu.eval_crude(x).unwrap(), 0.0);
        }
        for x in grid(0.0, 10.0, 10_000) {
            assert_eq!(ActivationKind::Mish.eval_crude(x).unwrap(), x);
        }
    }

    #[test]
    fn residuals_are_continuous() {
        let n = 1_000_000;
        let h = 10.0 / n as f64;
        for k in ActivationKind::COMPLEX {
            let g = k.residual_target().unwrap();
            let mut prev = g.eval(-5.0);
            let mut max_jump: f64 = 0.0;
            for i in 1..=n {
                let x = -5.0 + i as f64 * h;
                let y = g.eval(x);
                max_jump = max_jump.max((y - prev).abs());
                prev = y;
            }
            // Lipschitz bound of the residual times the step.
            assert!(max_jump < 2.0 * h * 6.0, "{k}: jump {max_jump}");
            for &c in k.crude_kinks() {
                let l = g.eval(c - 1e-9);
                let r = g.eval(c + 1e-9);
                assert!((l - r).abs() < 1e-7, "{k} kink at {c}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for k in ActivationKind::ALL {
            for x in grid(-4.0, 4.0, 160) {
                if k == ActivationKind::Relu && x.abs() < 1e-3 {
                    continue;
                }
                let h = 1e-6;
                let fd = (k.eval_exact(x + h) - k.eval_exact(x - h)) / (2.0 * h);
                assert!((fd - k.derivative(x)).abs() < 1e-6, "{k} at {x}");
            }
        }
    }

    #[test]
    fn names_roundtrip() {
        for k in ActivationKind::ALL {
            assert_eq!(k.name().parse::<ActivationKind>().unwrap(), k);
        }
        assert!("swish".parse::<ActivationKind>().is_err());
    }
}
