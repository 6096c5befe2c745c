//! Three-party replicated secret sharing emulator with cost accounting.
//!
//! Local operations act on shares directly. Secure multiplications,
//! truncations and comparisons compute their result from the plaintext
//! shadow of the shares and reshare it with fresh randomness, while their
//! cost is charged from a [`CostTable`]. Numerics therefore match the
//! plaintext ring program bit for bit; only the accounting is simulated.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nn::{FixedLayer, FixedModel, NnError};
use crate::piecewise::{CompiledPoly, OpCounts, PiecewisePoly, RingBackend};
use crate::ring::{raw, RingSpec, RingVal};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MpcError {
    #[error("replicated shares are inconsistent (party {0})")]
    Inconsistent(usize),
    #[error("ring mismatch: {0} vs {1}")]
    SpecMismatch(RingSpec, RingSpec),
    #[error("invalid network profile: {0}")]
    Profile(&'static str),
    #[error(transparent)]
    Model(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkProfile {
    /// Seconds per communication round.
    pub rtt: f64,
    /// Bits per second.
    pub bandwidth: f64,
    pub parties: u32,
    /// Seconds per local ring operation.
    pub cpu_per_op: f64,
}

impl Default for NetworkProfile {
    fn default() -> Self {
        NetworkProfile { rtt: 1e-3, bandwidth: 252e6, parties: 3, cpu_per_op: 1e-8 }
    }
}

impl NetworkProfile {
    pub fn validate(&self) -> Result<(), MpcError> {
        if !(self.rtt > 0.0 && self.bandwidth > 0.0 && self.cpu_per_op > 0.0) {
            return Err(MpcError::Profile("rtt, bandwidth and cpu_per_op must be positive"));
        }
        if !(self.parties == 2 || self.parties == 3) {
            return Err(MpcError::Profile("parties must be 2 or 3"));
        }
        Ok(())
    }
}

/// Cost of one primitive as a function of the ring width:
/// `rounds = rounds_const + rounds_per_log2_ell * ceil(log2 ell) + rounds_per_ell * ell`,
/// `bits per party = bits_const + bits_per_ell * ell`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrimitiveCost {
    pub rounds_const: f64,
    pub rounds_per_log2_ell: f64,
    pub rounds_per_ell: f64,
    pub bits_const: f64,
    pub bits_per_ell: f64,
}

impl PrimitiveCost {
    pub const fn flat(rounds: f64, bits_per_ell: f64) -> Self {
        PrimitiveCost {
            rounds_const: rounds,
            rounds_per_log2_ell: 0.0,
            rounds_per_ell: 0.0,
            bits_const: 0.0,
            bits_per_ell,
        }
    }

    pub fn rounds(&self, ell: u32) -> u64 {
        let v = self.rounds_const + self.rounds_per_log2_ell * ceil_log2(ell) as f64 + self.rounds_per_ell * ell as f64;
        libm::ceil(v.max(0.0)) as u64
    }

    pub fn bits(&self, ell: u32) -> u64 {
        libm::ceil((self.bits_const + self.bits_per_ell * ell as f64).max(0.0)) as u64
    }
}

fn ceil_log2(v: u32) -> u32 {
    32 - (v.max(1) - 1).leading_zeros()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostTable {
    /// Multiplication with resharing.
    pub mul: PrimitiveCost,
    pub trunc: PrimitiveCost,
    pub comp: PrimitiveCost,
}

impl CostTable {
    pub fn three_party() -> Self {
        CostTable {
            mul: PrimitiveCost::flat(1.0, 2.0),
            trunc: PrimitiveCost::flat(1.0, 1.0),
            comp: PrimitiveCost {
                rounds_const: 1.0,
                rounds_per_log2_ell: 1.0,
                rounds_per_ell: 0.0,
                bits_const: 0.0,
                bits_per_ell: 4.0,
            },
        }
    }

    /// Beaver-triple style two-party preset.
    pub fn two_party() -> Self {
        CostTable {
            mul: PrimitiveCost::flat(1.0, 4.0),
            trunc: PrimitiveCost::flat(1.0, 2.0),
            comp: PrimitiveCost {
                rounds_const: 2.0,
                rounds_per_log2_ell: 1.0,
                rounds_per_ell: 0.0,
                bits_const: 0.0,
                bits_per_ell: 8.0,
            },
        }
    }

    pub fn for_parties(parties: u32) -> Self {
        if parties == 2 {
            Self::two_party()
        } else {
            Self::three_party()
        }
    }
}

impl Default for CostTable {
    fn default() -> Self {
        Self::three_party()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerCost {
    pub name: String,
    pub rounds: u64,
    pub bits: u64,
    pub local_ops: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostReport {
    pub rounds: u64,
    /// Total bits sent by all parties.
    pub bits: u64,
    pub bytes: u64,
    pub local_ops: u64,
    /// Inferences the report covers.
    pub batch: u64,
    pub layers: Vec<LayerCost>,
}

impl CostReport {
    pub fn empty(batch: u64) -> Self {
        CostReport { batch, ..Default::default() }
    }

    pub fn push_layer(&mut self, layer: LayerCost) {
        self.rounds += layer.rounds;
        self.bits += layer.bits;
        self.bytes = self.bits.div_ceil(8);
        self.local_ops += layer.local_ops;
        self.layers.push(layer);
    }

    /// Sums two reports over the same batch.
    pub fn merge(&mut self, other: CostReport) {
        for l in other.layers {
            self.push_layer(l);
        }
    }
}

/// `(rounds * rtt + bits / bandwidth + local_ops * cpu_per_op) / batch`.
pub fn time_estimate(report: &CostReport, profile: &NetworkProfile) -> f64 {
    let total = report.rounds as f64 * profile.rtt
        + report.bits as f64 / profile.bandwidth
        + report.local_ops as f64 * profile.cpu_per_op;
    total / report.batch.max(1) as f64
}

/// Running cost of one layer. Every primitive invocation acts on a SIMD
/// vector of `elements` values: rounds are charged once, bits per element.
#[derive(Debug, Clone, Copy)]
pub struct Meter {
    table: CostTable,
    ell: u32,
    parties: u64,
    pub rounds: u64,
    pub bits: u64,
    pub local_ops: u64,
}

impl Meter {
    pub fn new(table: CostTable, ell: u32, parties: u32) -> Self {
        Meter { table, ell, parties: parties as u64, rounds: 0, bits: 0, local_ops: 0 }
    }

    fn charge(&mut self, p: PrimitiveCost, elements: u64) {
        self.rounds += p.rounds(self.ell);
        self.bits += p.bits(self.ell) * self.parties * elements;
    }

    pub fn mul(&mut self, elements: u64) {
        self.charge(self.table.mul, elements);
    }
    pub fn trunc(&mut self, elements: u64) {
        self.charge(self.table.trunc, elements);
    }
    pub fn comp(&mut self, elements: u64) {
        self.charge(self.table.comp, elements);
    }
    pub fn local(&mut self, ops: u64) {
        self.local_ops += ops;
    }

    /// Charges an operation census applied to `elements` values at once.
    pub fn census(&mut self, c: &OpCounts, elements: u64) {
        for _ in 0..c.comp {
            self.comp(elements);
        }
        for _ in 0..c.mul_trunc {
            self.mul(elements);
            self.trunc(elements);
        }
        for _ in 0..c.trunc {
            self.trunc(elements);
        }
        for _ in 0..c.select {
            self.mul(elements);
        }
        self.local(c.local * elements);
    }

    pub fn finish(self, name: &str) -> LayerCost {
        LayerCost { name: name.to_string(), rounds: self.rounds, bits: self.bits, local_ops: self.local_ops }
    }
}

/// Additive shares `x = s0 + s1 + s2`; party `i` holds `(s_i, s_{i+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shared(pub [u128; 3]);

impl Shared {
    pub fn views(&self) -> [(u128, u128); 3] {
        let s = self.0;
        [(s[0], s[1]), (s[1], s[2]), (s[2], s[0])]
    }

    fn open(&self, spec: &RingSpec) -> u128 {
        raw::add(spec, raw::add(spec, self.0[0], self.0[1]), self.0[2])
    }
}

pub fn share<R: Rng + ?Sized>(x: RingVal, rng: &mut R) -> Shared {
    share_raw(&x.spec(), x.raw(), rng)
}

fn share_raw<R: Rng + ?Sized>(spec: &RingSpec, x: u128, rng: &mut R) -> Shared {
    let a = rng.random::<u128>() & spec.mask();
    let b = rng.random::<u128>() & spec.mask();
    Shared([a, b, raw::sub(spec, raw::sub(spec, x, a), b)])
}

/// Rebuilds the secret from the three parties' views, checking that each
/// residue is held consistently by both parties that own it.
pub fn reconstruct(views: &[(u128, u128); 3], spec: RingSpec) -> Result<RingVal, MpcError> {
    for i in 0..3 {
        if views[i].1 != views[(i + 1) % 3].0 {
            return Err(MpcError::Inconsistent(i));
        }
    }
    let x = raw::add(&spec, raw::add(&spec, views[0].0, views[1].0), views[2].0);
    Ok(RingVal::from_raw(x, spec))
}

/// Share backend over a SIMD vector of values.
pub struct ShareRing {
    spec: RingSpec,
    rng: ChaCha8Rng,
    pub meter: Meter,
}

impl ShareRing {
    pub fn new(spec: RingSpec, table: CostTable, parties: u32, seed: u64) -> Self {
        ShareRing { spec, rng: ChaCha8Rng::seed_from_u64(seed), meter: Meter::new(table, spec.ell(), parties) }
    }

    pub fn share_all(&mut self, xs: &[u128]) -> Vec<Shared> {
        xs.iter().map(|&x| share_raw(&self.spec, x, &mut self.rng)).collect()
    }

    pub fn open_all(&self, xs: &[Shared]) -> Vec<u128> {
        xs.iter().map(|s| s.open(&self.spec)).collect()
    }

    fn reshare(&mut self, xs: impl Iterator<Item = u128>) -> Vec<Shared> {
        let spec = self.spec;
        xs.map(|x| share_raw(&spec, x, &mut self.rng)).collect()
    }

    fn local_map(&mut self, a: &[Shared], b: &[Shared], f: impl Fn(&RingSpec, u128, u128) -> u128) -> Vec<Shared> {
        self.meter.local(a.len() as u64);
        let spec = self.spec;
        a.iter().zip(b).map(|(x, y)| Shared(core::array::from_fn(|i| f(&spec, x.0[i], y.0[i])))).collect()
    }

    fn width(v: &[Shared]) -> u64 {
        v.len() as u64
    }
}

/// SIMD width is set by the first secret operand; public constants are
/// broadcast lazily.
impl RingBackend for ShareRing {
    type V = Vec<Shared>;

    fn public(&mut self, r: u128) -> Vec<Shared> {
        // a public constant as the trivial sharing (r, 0, 0), width 1
        vec![Shared([r & self.spec.mask(), 0, 0])]
    }
    fn add(&mut self, a: &Vec<Shared>, b: &Vec<Shared>) -> Vec<Shared> {
        let (a, b) = broadcast(a, b);
        self.local_map(&a, &b, raw::add)
    }
    fn sub(&mut self, a: &Vec<Shared>, b: &Vec<Shared>) -> Vec<Shared> {
        let (a, b) = broadcast(a, b);
        self.local_map(&a, &b, raw::sub)
    }
    fn mul_int(&mut self, a: &Vec<Shared>, c: i64) -> Vec<Shared> {
        self.meter.local(Self::width(a));
        let spec = self.spec;
        a.iter().map(|x| Shared(x.0.map(|s| raw::mul_int(&spec, s, c)))).collect()
    }
    fn mul_trunc(&mut self, a: &Vec<Shared>, b: &Vec<Shared>) -> Vec<Shared> {
        let (a, b) = broadcast(a, b);
        let n = Self::width(&a);
        self.meter.mul(n);
        self.meter.trunc(n);
        let spec = self.spec;
        let out: Vec<u128> =
            a.iter().zip(&b).map(|(x, y)| raw::mul_trunc(&spec, x.open(&spec), y.open(&spec))).collect();
        self.reshare(out.into_iter())
    }
    fn dot_public_trunc(&mut self, coeffs: &[u128], xs: &[Vec<Shared>]) -> Vec<Shared> {
        let n = xs.iter().map(|v| v.len()).max().unwrap_or(1);
        let terms = coeffs.len().min(xs.len());
        self.meter.local(coeffs.len() as u64 * n as u64);
        self.meter.trunc(n as u64);
        let spec = self.spec;
        // coefficient times share is local; accumulate the double-width sum
        // on the shadow and truncate once
        let out: Vec<u128> = (0..n)
            .map(|e| {
                let opened: Vec<u128> = xs[..terms].iter().map(|v| v[e.min(v.len() - 1)].open(&spec)).collect();
                raw::dot_trunc(&spec, terms, |i| coeffs[i], |i| opened[i])
            })
            .collect();
        self.reshare(out.into_iter())
    }
    fn cmp_gt(&mut self, a: &Vec<Shared>, b: &Vec<Shared>) -> Vec<Shared> {
        let (a, b) = broadcast(a, b);
        self.meter.comp(Self::width(&a));
        let spec = self.spec;
        let out: Vec<u128> = a.iter().zip(&b).map(|(x, y)| raw::cmp_gt(&spec, x.open(&spec), y.open(&spec))).collect();
        self.reshare(out.into_iter())
    }
    fn select(&mut self, bit: &Vec<Shared>, v: &Vec<Shared>) -> Vec<Shared> {
        let (a, b) = broadcast(bit, v);
        self.meter.mul(Self::width(&a));
        let spec = self.spec;
        let out: Vec<u128> =
            a.iter().zip(&b).map(|(c, x)| c.open(&spec).wrapping_mul(x.open(&spec)) & spec.mask()).collect();
        self.reshare(out.into_iter())
    }
}

fn broadcast(a: &[Shared], b: &[Shared]) -> (Vec<Shared>, Vec<Shared>) {
    let n = a.len().max(b.len());
    let stretch = |v: &[Shared]| if v.len() == n { v.to_vec() } else { vec![v[0]; n] };
    (stretch(a), stretch(b))
}

/// Runs the approximation's ring program on shared inputs.
pub fn secure_eval(
    pp: &PiecewisePoly,
    x: &[Shared],
    table: &CostTable,
    parties: u32,
    seed: u64,
) -> (Vec<Shared>, CostReport) {
    let spec = pp.theta().ring;
    let plan = pp.compile(spec);
    let mut backend = ShareRing::new(spec, *table, parties, seed);
    let y = eval_shared(&plan, &mut backend, x);
    let mut report = CostReport::empty(x.len() as u64);
    report.push_layer(backend.meter.finish("activation"));
    (y, report)
}

fn eval_shared(plan: &CompiledPoly, b: &mut ShareRing, x: &[Shared]) -> Vec<Shared> {
    if x.is_empty() {
        return Vec::new();
    }
    plan.run(b, &x.to_vec())
}

/// Analytic cost of one activation layer of `elements` values; equals what
/// [`secure_eval`] charges.
pub fn activation_cost(pp: &PiecewisePoly, elements: u64, table: &CostTable, parties: u32) -> LayerCost {
    let mut m = Meter::new(*table, pp.theta().ring.ell(), parties);
    if elements > 0 {
        m.census(&pp.op_census(), elements);
    }
    m.finish("activation")
}

/// Fixed-point inference on secret-shared inputs. Weights are shared too, so
/// every linear output costs one multiplication and one truncation.
pub fn emulate_inference(
    model: &FixedModel,
    inputs: &[Vec<f64>],
    table: &CostTable,
    parties: u32,
    seed: u64,
) -> Result<(Vec<Vec<u128>>, CostReport), MpcError> {
    let spec = model.spec();
    let batch = inputs.len();
    let mut backend = ShareRing::new(spec, *table, parties, seed);
    let mut report = CostReport::empty(batch as u64);
    let mut width = model.input_dim().or(inputs.first().map(|x| x.len())).unwrap_or(0);
    // activations stored per feature, each a SIMD vector over the batch
    let mut cur: Vec<Vec<Shared>> = Vec::with_capacity(width);
    for j in 0..width {
        let col: Vec<u128> = inputs
            .iter()
            .map(|x| {
                if x.len() != width {
                    return Err(NnError::Dimension { expected: width, got: x.len() });
                }
                Ok(spec.encode_raw(x[j]).unwrap_or(0))
            })
            .collect::<Result<_, _>>()?;
        cur.push(backend.share_all(&col));
    }
    for (li, layer) in model.layers().iter().enumerate() {
        backend.meter = Meter::new(*table, spec.ell(), parties);
        let name;
        match layer {
            FixedLayer::Linear { rows, cols, .. } => {
                name = "linear";
                let n = batch as u64;
                backend.meter.mul(n * *rows as u64);
                backend.meter.trunc(n * *rows as u64);
                backend.meter.local(n * (rows * (cols + 1)) as u64);
                cur = arith_layer(&mut backend, layer, &cur, batch);
                width = *rows;
            }
            FixedLayer::Affine { .. } => {
                name = "batchnorm";
                let n = batch as u64 * width as u64;
                backend.meter.mul(n);
                backend.meter.trunc(n);
                backend.meter.local(2 * n);
                cur = arith_layer(&mut backend, layer, &cur, batch);
            }
            FixedLayer::Activation(plan) => {
                name = "activation";
                let flat: Vec<Shared> = cur.iter().flatten().copied().collect();
                let y = if flat.is_empty() { Vec::new() } else { plan.run(&mut backend, &flat) };
                cur = y.chunks(batch.max(1)).map(|c| c.to_vec()).collect();
            }
        }
        let mut cost = backend.meter.finish(name);
        cost.name = alloc::format!("{li}:{name}");
        report.push_layer(cost);
    }
    let outputs = (0..batch).map(|e| cur.iter().map(|c| c[e].open(&spec)).collect()).collect();
    Ok((outputs, report))
}

/// A linear or affine layer on feature-major shares: every output is
/// computed on the shadow values and reshared.
fn arith_layer(backend: &mut ShareRing, layer: &FixedLayer, cur: &[Vec<Shared>], batch: usize) -> Vec<Vec<Shared>> {
    let spec = backend.spec;
    let per_example: Vec<Vec<u128>> = (0..batch)
        .map(|e| {
            let xs: Vec<u128> = cur.iter().map(|c| c[e].open(&spec)).collect();
            layer.apply_arith(&spec, &xs).expect("linear or affine layer")
        })
        .collect();
    let width = per_example.first().map_or(0, |v| v.len());
    (0..width).map(|r| backend.reshare(per_example.iter().map(|v| v[r]))).collect()
}

/// Closed-form cost of [`emulate_inference`] for a model shape.
pub fn model_cost(model: &FixedModel, pp: &PiecewisePoly, batch: u64, table: &CostTable, parties: u32) -> CostReport {
    let ell = model.spec().ell();
    let census = pp.op_census();
    let mut report = CostReport::empty(batch);
    let mut width = model.input_dim().unwrap_or(0) as u64;
    for (li, layer) in model.layers().iter().enumerate() {
        let mut m = Meter::new(*table, ell, parties);
        let name = match layer {
            FixedLayer::Linear { rows, cols, .. } => {
                let outs = batch * *rows as u64;
                m.mul(outs);
                m.trunc(outs);
                m.local(batch * (*rows * (*cols + 1)) as u64);
                width = *rows as u64;
                "linear"
            }
            FixedLayer::Affine { .. } => {
                let n = batch * width;
                m.mul(n);
                m.trunc(n);
                m.local(2 * n);
                "batchnorm"
            }
            FixedLayer::Activation(_) => {
                if batch * width > 0 {
                    m.census(&census, batch * width);
                }
                "activation"
            }
        };
        let mut cost = m.finish(name);
        cost.name = alloc::format!("{li}:{name}");
        report.push_layer(cost);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::{PiecewiseParts, PlainRing, Provenance, TailPoly};
    use crate::search::Theta;

    fn spec16() -> RingSpec {
        RingSpec::new(16, 8).unwrap()
    }

    #[test]
    fn share_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = RingSpec::new(84, 30).unwrap();
        for _ in 0..10_000 {
            let x = RingVal::from_raw(rng.random(), spec);
            let s = share(x, &mut rng);
            assert_eq!(reconstruct(&s.views(), spec).unwrap(), x);
        }
        let z = share(RingVal::zero(spec), &mut rng);
        assert_eq!(reconstruct(&z.views(), spec).unwrap().raw(), 0);
    }

    #[test]
    fn tampered_views_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = share(RingVal::from_raw(77, spec16()), &mut rng);
        let mut v = s.views();
        v[1].1 ^= 1;
        assert_eq!(reconstruct(&v, spec16()), Err(MpcError::Inconsistent(1)));
    }

    #[test]
    fn party_view_is_uniform() {
        // chi-square on the top 4 bits of each residue one party sees
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = spec16();
        let n = 160_000;
        let mut bins = [[0u32; 16]; 2];
        for _ in 0..n {
            let (a, b) = share(RingVal::from_raw(12345, spec), &mut rng).views()[0];
            bins[0][(a >> 12) as usize] += 1;
            bins[1][(b >> 12) as usize] += 1;
        }
        let expected = n as f64 / 16.0;
        for b in bins {
            let chi2: f64 = b.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
            // 15 degrees of freedom, 0.999 quantile is 37.7
            assert!(chi2 < 37.7, "{chi2}");
        }
    }

    #[test]
    fn time_estimate_linear_in_rtt() {
        let r = CostReport { rounds: 10, bits: 2_520_000, bytes: 315_000, local_ops: 100, batch: 1, layers: vec![] };
        let p = NetworkProfile::default();
        let t = time_estimate(&r, &p);
        let q = NetworkProfile { rtt: 2.0 * p.rtt, ..p };
        assert!((time_estimate(&r, &q) - t - 10.0 * p.rtt).abs() < 1e-15);
        assert_eq!(time_estimate(&CostReport::empty(1), &p), 0.0);
    }

    #[test]
    fn comparison_rounds_follow_width() {
        let t = CostTable::three_party();
        assert_eq!(t.comp.rounds(32), 6);
        assert_eq!(t.comp.rounds(84), 8);
        assert_eq!(t.comp.bits(64), 256);
        assert_eq!(t.mul.bits(64), 128);
    }

    fn sample_pp(spec: RingSpec) -> PiecewisePoly {
        PiecewisePoly::new(PiecewiseParts {
            function: "silu".into(),
            theta: Theta { m: 3, k: 3, ring: spec },
            breakpoints: vec![-5.0, -1.0, 1.0, 5.0],
            pieces: vec![vec![0.1, 0.0, 0.01], vec![0.0, 0.2, -0.1, 0.05], vec![-0.02, 0.003]],
            tail_left: TailPoly::linear(0.0, 0.0),
            tail_right: TailPoly::linear(0.0, 1.0),
            crude: Some(crate::ActivationKind::Silu),
            provenance: Provenance::new("test"),
        })
        .unwrap()
    }

    #[test]
    fn secure_eval_is_transparent_and_cost_matches_census() {
        let spec = RingSpec::new(64, 24).unwrap();
        let pp = sample_pp(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<u128> = (0..500).map(|_| spec.encode_raw(rng.random_range(-7.0..7.0)).unwrap()).collect();
        let mut b = ShareRing::new(spec, CostTable::default(), 3, 0);
        let shared = b.share_all(&xs);
        let (y, report) = secure_eval(&pp, &shared, &CostTable::default(), 3, 9);
        let plan = pp.compile(spec);
        for (x, s) in xs.iter().zip(&y) {
            let want = plan.run(&mut PlainRing::new(spec), x);
            assert_eq!(reconstruct(&s.views(), spec).unwrap().raw(), want);
        }
        let analytic = activation_cost(&pp, 500, &CostTable::default(), 3);
        assert_eq!(report.layers[0].rounds, analytic.rounds);
        assert_eq!(report.layers[0].bits, analytic.bits);
        assert_eq!(report.layers[0].local_ops, analytic.local_ops);
    }

    #[test]
    fn batch_scales_bits_not_rounds() {
        let spec = RingSpec::new(64, 24).unwrap();
        let pp = sample_pp(spec);
        let one = activation_cost(&pp, 1, &CostTable::default(), 3);
        let many = activation_cost(&pp, 64, &CostTable::default(), 3);
        assert_eq!(one.rounds, many.rounds);
        assert_eq!(one.bits * 64, many.bits);
    }
}
