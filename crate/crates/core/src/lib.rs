//! Density-aware piecewise polynomial approximation of neural-network
//! activation functions for secure (MPC) inference.
//!
//! The crate is `no_std` with `alloc`. All IO, document formats and the
//! command line live in the `afapprox` companion crate.
//!
//! Module map:
//!
//! * [`activations`]: exact and crude activation evaluators, residual targets.
//! * [`ring`]: fixed-point arithmetic over `Z_{2^ell}` with `d` fractional bits.
//! * [`piecewise`]: the piecewise polynomial, real and ring evaluation, op census.
//! * [`approx`]: error metrics, Chebyshev interpolation, the accuracy-guided generator.
//! * [`search`]: simulated annealing over `(m, k, ring)`.
//! * [`mpccost`]: replicated-sharing emulator and inference cost model.
//! * [`nn`]: fully connected runtime with batch norm, trainer, synthetic data.
//! * [`baselines`]: MiniONN, ReLU swap, MPCFormer quadratic, fixed-threshold max-error mode.
#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod activations;
pub mod approx;
pub mod baselines;
pub mod chebyshev;
pub mod lstsq;
pub mod mpccost;
pub mod nn;
pub mod piecewise;
pub mod quadrature;
pub mod ring;
pub mod search;
mod wide;

pub use activations::{ActivationKind, Target};
pub use piecewise::{PiecewisePoly, TailPoly};
pub use ring::{RingSpec, RingVal};
pub use search::Theta;
