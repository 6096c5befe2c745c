//! The piecewise polynomial `F(x) = sum_i I_i(x) p_i(x)` with linear tails,
//! evaluated either on reals or on a fixed-point ring through a small
//! primitive program shared by every backend.
//!
//! Piece `i` (0-based) covers `(x_i, x_{i+1}]`; `x = s` is assigned to piece
//! 0, the left tail covers `x < s` and the right tail `x > e`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::activations::ActivationKind;
use crate::ring::{raw, RingSpec, RingVal};
use crate::search::Theta;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PiecewiseError {
    #[error("need at least one piece")]
    NoPieces,
    #[error("{breakpoints} breakpoints for {pieces} pieces")]
    CountMismatch { breakpoints: usize, pieces: usize },
    #[error("breakpoints must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("first/last breakpoint must equal s/e")]
    BoundsMismatch,
    #[error("piece {piece} has {len} coefficients, degree cap is {k}")]
    DegreeExceeded { piece: usize, len: usize, k: usize },
    #[error("{pieces} pieces exceed the cap m = {m}")]
    TooManyPieces { pieces: usize, m: usize },
    #[error("non-finite coefficient or breakpoint")]
    NonFinite,
    #[error("ring {got} does not match the approximation ring {want}")]
    SpecMismatch { got: RingSpec, want: RingSpec },
}

/// A tail polynomial in the monomial basis. Normally linear.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailPoly {
    coeffs: Vec<f64>,
}

impl TailPoly {
    pub fn linear(a0: f64, a1: f64) -> Self {
        TailPoly { coeffs: vec![a0, a1] }
    }

    pub fn new(coeffs: Vec<f64>) -> Self {
        let coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs };
        TailPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    /// `a0 + c*x` with integer `c`: evaluable without truncation.
    fn integer_linear(&self) -> Option<i64> {
        match self.coeffs.as_slice() {
            [_] => Some(0),
            [_, a1] if libm::trunc(*a1) == *a1 && a1.abs() < 1e15 => Some(*a1 as i64),
            _ => None,
        }
    }
}

pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Horner's rule with error-free transformations: as accurate as plain
/// Horner in twice the working precision. Monomial coefficients fitted on
/// narrow intervals away from zero cancel heavily, and plain Horner returns
/// rounding noise there.
pub fn horner_compensated(coeffs: &[f64], x: f64) -> f64 {
    let Some((&last, rest)) = coeffs.split_last() else {
        return 0.0;
    };
    let mut s = last;
    let mut r = 0.0;
    for &c in rest.iter().rev() {
        let p = s * x;
        let pe = libm::fma(s, x, -p);
        let t = p + c;
        let z = t - p;
        let se = (p - (t - z)) + (c - z);
        s = t;
        r = libm::fma(r, x, pe + se);
    }
    s + r
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Provenance {
    pub generator: String,
    pub delta: Option<f64>,
    /// Indices of pieces committed even though they exceed the per-piece budget.
    pub forced_pieces: Vec<usize>,
    pub notes: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(generator: &str) -> Self {
        Provenance { generator: generator.into(), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    function: String,
    s: f64,
    e: f64,
    theta: Theta,
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
    tail_left: TailPoly,
    tail_right: TailPoly,
    crude: Option<ActivationKind>,
    provenance: Provenance,
}

/// Everything needed to build a [`PiecewisePoly`]; checked by
/// [`PiecewisePoly::new`].
#[derive(Debug, Clone)]
pub struct PiecewiseParts {
    pub function: String,
    pub theta: Theta,
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
    pub tail_left: TailPoly,
    pub tail_right: TailPoly,
    pub crude: Option<ActivationKind>,
    pub provenance: Provenance,
}

impl PiecewisePoly {
    pub fn new(parts: PiecewiseParts) -> Result<Self, PiecewiseError> {
        let PiecewiseParts { function, theta, breakpoints, pieces, tail_left, tail_right, crude, provenance } = parts;
        if pieces.is_empty() {
            return Err(PiecewiseError::NoPieces);
        }
        if breakpoints.len() != pieces.len() + 1 {
            return Err(PiecewiseError::CountMismatch { breakpoints: breakpoints.len(), pieces: pieces.len() });
        }
        let finite = breakpoints.iter().all(|b| b.is_finite())
            && pieces.iter().flatten().all(|c| c.is_finite())
            && tail_left.coeffs.iter().chain(&tail_right.coeffs).all(|c| c.is_finite());
        if !finite {
            return Err(PiecewiseError::NonFinite);
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[0] >= w[1]) {
            return Err(PiecewiseError::NotIncreasing(i + 1));
        }
        if pieces.len() > theta.m {
            return Err(PiecewiseError::TooManyPieces { pieces: pieces.len(), m: theta.m });
        }
        for (i, p) in pieces.iter().enumerate() {
            if p.is_empty() || p.len() > theta.k + 1 {
                return Err(PiecewiseError::DegreeExceeded { piece: i, len: p.len(), k: theta.k });
            }
        }
        let s = breakpoints[0];
        let e = breakpoints[breakpoints.len() - 1];
        Ok(PiecewisePoly { function, s, e, theta, breakpoints, pieces, tail_left, tail_right, crude, provenance })
    }

    pub fn function(&self) -> &str {
        &self.function
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn e(&self) -> f64 {
        self.e
    }
    pub fn theta(&self) -> Theta {
        self.theta
    }
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }
    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }
    pub fn tail_left(&self) -> &TailPoly {
        &self.tail_left
    }
    pub fn tail_right(&self) -> &TailPoly {
        &self.tail_right
    }
    pub fn crude(&self) -> Option<ActivationKind> {
        self.crude
    }
    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
    pub fn provenance_mut(&mut self) -> &mut Provenance {
        &mut self.provenance
    }

    /// Same approximation on a different ring.
    pub fn with_ring(mut self, ring: RingSpec) -> Self {
        self.theta.ring = ring;
        self
    }

    /// Index of the piece covering `x`, or `None` outside `[s, e]`.
    pub fn piece_index(&self, x: f64) -> Option<usize> {
        if x < self.s || x > self.e {
            return None;
        }
        let interior = &self.breakpoints[1..self.pieces.len()];
        Some(interior.partition_point(|&b| b < x))
    }

    /// The fitted part only, without the crude component.
    pub fn eval_fitted(&self, x: f64) -> f64 {
        if x < self.s {
            self.tail_left.eval(x)
        } else if x > self.e {
            self.tail_right.eval(x)
        } else {
            let i = self.piece_index(x).unwrap_or(0);
            horner(&self.pieces[i], x)
        }
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        let crude = self.crude.and_then(|k| k.eval_crude(x).ok()).unwrap_or(0.0);
        self.eval_fitted(x) + crude
    }

    /// Highest power of `x` the ring program needs.
    fn max_power(&self) -> usize {
        let mut kmax = self.pieces.iter().map(|p| p.len() - 1).max().unwrap_or(0);
        for t in [&self.tail_left, &self.tail_right] {
            if t.integer_linear().is_none() {
                kmax = kmax.max(t.degree());
            }
        }
        kmax.max(1)
    }

    /// Pre-encodes breakpoints and coefficients for `spec`.
    pub fn compile(&self, spec: RingSpec) -> CompiledPoly {
        let enc = |v: f64| spec.encode_raw(v).unwrap_or(0);
        let tail = |t: &TailPoly| match t.integer_linear() {
            Some(c) => RingTail::Local { a0: enc(t.coeffs[0]), a1: c },
            None => RingTail::Dot(t.coeffs.iter().map(|&c| enc(c)).collect()),
        };
        let mut thresholds = Vec::with_capacity(self.pieces.len() + 1);
        thresholds.push(raw::sub(&spec, enc(self.s), 1));
        thresholds.extend(self.breakpoints[1..].iter().map(|&b| enc(b)));
        let sorted = thresholds.windows(2).all(|w| spec.signed(w[0]) <= spec.signed(w[1]));
        CompiledPoly {
            spec,
            sorted,
            kmax: self.max_power(),
            thresholds,
            pieces: self.pieces.iter().map(|p| p.iter().map(|&c| enc(c)).collect()).collect(),
            tail_left: tail(&self.tail_left),
            tail_right: tail(&self.tail_right),
            crude: self.crude,
        }
    }

    pub fn eval_ring(&self, x: RingVal) -> Result<RingVal, PiecewiseError> {
        let want = self.theta.ring;
        if x.spec() != want {
            return Err(PiecewiseError::SpecMismatch { got: x.spec(), want });
        }
        let plan = self.compile(want);
        let mut b = PlainRing::new(want);
        let y = plan.run(&mut b, &x.raw());
        Ok(RingVal::from_raw(y, want))
    }

    /// Operation counts of one ring evaluation; depends only on the shape.
    pub fn op_census(&self) -> OpCounts {
        let plan = self.compile(self.theta.ring);
        let mut c = CountingRing::default();
        plan.run(&mut c, &());
        c.counts
    }
}

/// Primitive operations of the ring program. Public constants enter through
/// [`RingBackend::public`]; `dot_public_trunc` multiplies public raw
/// coefficients into secret values locally and truncates once.
pub trait RingBackend {
    type V: Clone;

    fn public(&mut self, raw: u128) -> Self::V;
    fn add(&mut self, a: &Self::V, b: &Self::V) -> Self::V;
    fn sub(&mut self, a: &Self::V, b: &Self::V) -> Self::V;
    fn mul_int(&mut self, a: &Self::V, c: i64) -> Self::V;
    fn mul_trunc(&mut self, a: &Self::V, b: &Self::V) -> Self::V;
    fn dot_public_trunc(&mut self, coeffs: &[u128], xs: &[Self::V]) -> Self::V;
    fn cmp_gt(&mut self, a: &Self::V, b: &Self::V) -> Self::V;
    fn select(&mut self, bit: &Self::V, v: &Self::V) -> Self::V;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OpCounts {
    pub comp: u64,
    /// Secret-by-secret multiplications, each followed by a truncation.
    pub mul_trunc: u64,
    /// Truncations of public-by-secret dot products.
    pub trunc: u64,
    pub select: u64,
    pub local: u64,
}

impl OpCounts {
    pub fn secure_mul(&self) -> u64 {
        self.mul_trunc + self.trunc + self.select
    }

    pub fn scaled(&self, n: u64) -> OpCounts {
        OpCounts {
            comp: self.comp * n,
            mul_trunc: self.mul_trunc * n,
            trunc: self.trunc * n,
            select: self.select * n,
            local: self.local * n,
        }
    }
}

impl core::ops::Add for OpCounts {
    type Output = OpCounts;
    fn add(self, o: OpCounts) -> OpCounts {
        OpCounts {
            comp: self.comp + o.comp,
            mul_trunc: self.mul_trunc + o.mul_trunc,
            trunc: self.trunc + o.trunc,
            select: self.select + o.select,
            local: self.local + o.local,
        }
    }
}

impl core::ops::AddAssign for OpCounts {
    fn add_assign(&mut self, o: OpCounts) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum RingTail {
    Local { a0: u128, a1: i64 },
    Dot(Vec<u128>),
}

/// A [`PiecewisePoly`] with every public constant encoded on one ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledPoly {
    spec: RingSpec,
    kmax: usize,
    /// `enc(s) - 1`, then `enc(x_1) .. enc(x_m)`.
    thresholds: Vec<u128>,
    /// Thresholds nondecreasing as signed values, so the comparison bits
    /// form a prefix of ones. False only when encoding wrapped.
    sorted: bool,
    pieces: Vec<Vec<u128>>,
    tail_left: RingTail,
    tail_right: RingTail,
    crude: Option<ActivationKind>,
}

impl CompiledPoly {
    pub fn spec(&self) -> RingSpec {
        self.spec
    }

    /// The full oblivious program: every piece is evaluated and the
    /// indicators pick one.
    pub fn run<B: RingBackend>(&self, b: &mut B, x: &B::V) -> B::V {
        let one = b.public(self.spec.one_raw());
        let mut powers = Vec::with_capacity(self.kmax + 1);
        powers.push(one.clone());
        powers.push(x.clone());
        for j in 2..=self.kmax {
            let p = b.mul_trunc(&powers[j - 1], x);
            powers.push(p);
        }

        let mut values = Vec::with_capacity(self.pieces.len() + 2);
        values.push(self.tail_value(b, &self.tail_left, x, &powers));
        for coeffs in &self.pieces {
            values.push(b.dot_public_trunc(coeffs, &powers[..coeffs.len()]));
        }
        values.push(self.tail_value(b, &self.tail_right, x, &powers));

        let bits: Vec<B::V> = self
            .thresholds
            .iter()
            .map(|&t| {
                let t = b.public(t);
                b.cmp_gt(x, &t)
            })
            .collect();
        let unit = b.public(1);
        let mut indicators = Vec::with_capacity(values.len());
        indicators.push(b.sub(&unit, &bits[0]));
        for w in bits.windows(2) {
            indicators.push(b.sub(&w[0], &w[1]));
        }
        indicators.push(bits[bits.len() - 1].clone());

        let mut acc = b.select(&indicators[0], &values[0]);
        for (ind, v) in indicators.iter().zip(&values).skip(1) {
            let term = b.select(ind, v);
            acc = b.add(&acc, &term);
        }
        match self.crude {
            Some(kind) => {
                let c = crude_program(b, kind, x, self.spec);
                b.add(&acc, &c)
            }
            None => acc,
        }
    }

    fn tail_value<B: RingBackend>(&self, b: &mut B, tail: &RingTail, x: &B::V, powers: &[B::V]) -> B::V {
        match tail {
            RingTail::Local { a0, a1 } => {
                let c = b.public(*a0);
                if *a1 == 0 {
                    c
                } else {
                    let lin = b.mul_int(x, *a1);
                    b.add(&lin, &c)
                }
            }
            RingTail::Dot(coeffs) => b.dot_public_trunc(coeffs, &powers[..coeffs.len()]),
        }
    }

    /// Plaintext evaluation that only computes the selected branch. Produces
    /// the same residue as [`CompiledPoly::run`] on [`PlainRing`], because
    /// every unselected term contributes exactly zero.
    pub fn eval_raw(&self, x: u128) -> u128 {
        let spec = &self.spec;
        if !self.sorted {
            return self.run(&mut PlainRing::new(self.spec), &x);
        }
        let xs = spec.signed(x);
        let above = self.thresholds.partition_point(|&t| spec.signed(t) < xs);
        let fitted = if above == 0 {
            self.tail_raw(&self.tail_left, x)
        } else if above == self.thresholds.len() {
            self.tail_raw(&self.tail_right, x)
        } else {
            self.dot_raw(&self.pieces[above - 1], x)
        };
        match self.crude {
            Some(kind) => {
                let mut pr = PlainRing::new(self.spec);
                let c = crude_program(&mut pr, kind, &x, self.spec);
                raw::add(spec, fitted, c)
            }
            None => fitted,
        }
    }

    fn dot_raw(&self, coeffs: &[u128], x: u128) -> u128 {
        let spec = &self.spec;
        let mut powers = [0u128; 32];
        let n = coeffs.len();
        if n > powers.len() {
            let mut pr = PlainRing::new(self.spec);
            let mut pw = vec![spec.one_raw(), x];
            for j in 2..n {
                let p = pr.mul_trunc(&pw[j - 1], &x);
                pw.push(p);
            }
            return pr.dot_public_trunc(coeffs, &pw[..n]);
        }
        powers[0] = spec.one_raw();
        if n > 1 {
            powers[1] = x;
        }
        for j in 2..n {
            powers[j] = raw::mul_trunc(spec, powers[j - 1], x);
        }
        raw::dot_trunc(spec, n, |i| coeffs[i], |i| powers[i])
    }

    fn tail_raw(&self, tail: &RingTail, x: u128) -> u128 {
        match tail {
            RingTail::Local { a0, a1 } => {
                if *a1 == 0 {
                    *a0
                } else {
                    raw::add(&self.spec, raw::mul_int(&self.spec, x, *a1), *a0)
                }
            }
            RingTail::Dot(coeffs) => self.dot_raw(coeffs, x),
        }
    }
}

/// Crude component on the ring:
/// SiLU `x * clamp(6x + 1/2, 0, 1)`, GeLU `x * clamp(10x, 0, 1/2)`,
/// Mish `max(0, x)`.
fn crude_program<B: RingBackend>(b: &mut B, kind: ActivationKind, x: &B::V, spec: RingSpec) -> B::V {
    let half = spec.one_raw() >> 1;
    let (slope, offset, cap) = match kind {
        ActivationKind::Silu => (6, half, spec.one_raw()),
        ActivationKind::Gelu => (10, 0, half),
        _ => {
            let zero = b.public(0);
            let c = b.cmp_gt(x, &zero);
            return b.select(&c, x);
        }
    };
    let scaled = b.mul_int(x, slope);
    let offset = b.public(offset);
    let u = b.add(&scaled, &offset);
    let cap = b.public(cap);
    let c1 = b.cmp_gt(&u, &cap);
    let gap = b.sub(&cap, &u);
    let down = b.select(&c1, &gap);
    let m1 = b.add(&u, &down);
    let zero = b.public(0);
    let c2 = b.cmp_gt(&zero, &m1);
    let neg = b.select(&c2, &m1);
    let h = b.sub(&m1, &neg);
    b.mul_trunc(x, &h)
}

/// Plaintext backend on raw residues.
#[derive(Debug, Clone, Copy)]
pub struct PlainRing {
    spec: RingSpec,
}

impl PlainRing {
    pub fn new(spec: RingSpec) -> Self {
        PlainRing { spec }
    }
}

impl RingBackend for PlainRing {
    type V = u128;

    fn public(&mut self, r: u128) -> u128 {
        r & self.spec.mask()
    }
    fn add(&mut self, a: &u128, b: &u128) -> u128 {
        raw::add(&self.spec, *a, *b)
    }
    fn sub(&mut self, a: &u128, b: &u128) -> u128 {
        raw::sub(&self.spec, *a, *b)
    }
    fn mul_int(&mut self, a: &u128, c: i64) -> u128 {
        raw::mul_int(&self.spec, *a, c)
    }
    fn mul_trunc(&mut self, a: &u128, b: &u128) -> u128 {
        raw::mul_trunc(&self.spec, *a, *b)
    }
    fn dot_public_trunc(&mut self, coeffs: &[u128], xs: &[u128]) -> u128 {
        raw::dot_trunc(&self.spec, coeffs.len().min(xs.len()), |i| coeffs[i], |i| xs[i])
    }
    fn cmp_gt(&mut self, a: &u128, b: &u128) -> u128 {
        raw::cmp_gt(&self.spec, *a, *b)
    }
    fn select(&mut self, bit: &u128, v: &u128) -> u128 {
        bit.wrapping_mul(*v) & self.spec.mask()
    }
}

/// Backend that only counts operations.
#[derive(Debug, Clone, Copy, Default)]
pub struct CountingRing {
    pub counts: OpCounts,
}

impl RingBackend for CountingRing {
    type V = ();

    fn public(&mut self, _: u128) {}
    fn add(&mut self, _: &(), _: &()) {
        self.counts.local += 1;
    }
    fn sub(&mut self, _: &(), _: &()) {
        self.counts.local += 1;
    }
    fn mul_int(&mut self, _: &(), _: i64) {
        self.counts.local += 1;
    }
    fn mul_trunc(&mut self, _: &(), _: &()) {
        self.counts.mul_trunc += 1;
    }
    fn dot_public_trunc(&mut self, coeffs: &[u128], _: &[()]) {
        self.counts.local += coeffs.len() as u64;
        self.counts.trunc += 1;
    }
    fn cmp_gt(&mut self, _: &(), _: &()) {
        self.counts.comp += 1;
    }
    fn select(&mut self, _: &(), _: &()) {
        self.counts.select += 1;
    }
}
