//! Fixed-point arithmetic over `R_{ell,d}`: residues mod `2^ell` read as
//! two's-complement integers with `d` fractional bits.
//!
//! Every operation masks back into `[0, 2^ell)`. Overflow wraps silently,
//! which is how a too-small ring corrupts inference; [`encode_checked`]
//! reports it instead. Products are computed at full width and truncated once
//! with an arithmetic shift (floor toward negative infinity).

use core::fmt;

use crate::wide::U256;

/// Ring widths offered to the search.
pub const RING_MENU: [u32; 4] = [128, 84, 64, 32];

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum RingError {
    #[error("ring spec mismatch: {0} vs {1}")]
    SpecMismatch(RingSpec, RingSpec),
    #[error("invalid ring spec ell={ell}, d={d}")]
    InvalidSpec { ell: u32, d: u32 },
    #[error("value {value} does not fit in {spec} (|x| must be below 2^{bits})")]
    OutOfRange { value: f64, spec: RingSpec, bits: u32 },
    #[error("non-finite value cannot be encoded")]
    NonFinite,
    #[error("selector must be 0 or 1, got raw {0}")]
    NotABit(u128),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawRingSpec"))]
pub struct RingSpec {
    ell: u32,
    d: u32,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct RawRingSpec {
    ell: u32,
    d: u32,
}

#[cfg(feature = "serde")]
impl TryFrom<RawRingSpec> for RingSpec {
    type Error = RingError;
    fn try_from(r: RawRingSpec) -> Result<Self, Self::Error> {
        RingSpec::new(r.ell, r.d)
    }
}

impl RingSpec {
    /// Any width in `2..=128` is accepted so tests can use small rings; the
    /// search only proposes widths from [`RING_MENU`].
    pub fn new(ell: u32, d: u32) -> Result<Self, RingError> {
        if !(2..=128).contains(&ell) || d == 0 || d >= ell {
            return Err(RingError::InvalidSpec { ell, d });
        }
        Ok(RingSpec { ell, d })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn is_menu_width(&self) -> bool {
        RING_MENU.contains(&self.ell)
    }

    #[inline]
    pub fn mask(&self) -> u128 {
        if self.ell == 128 {
            u128::MAX
        } else {
            (1u128 << self.ell) - 1
        }
    }

    /// Two's-complement reading of a residue.
    #[inline]
    pub fn signed(&self, raw: u128) -> i128 {
        let sh = 128 - self.ell;
        ((raw << sh) as i128) >> sh
    }

    #[inline]
    pub fn wrap(&self, v: i128) -> u128 {
        (v as u128) & self.mask()
    }

    /// Raw representation of 1.0.
    #[inline]
    pub fn one_raw(&self) -> u128 {
        1u128 << self.d
    }

    pub fn scale(&self) -> f64 {
        libm::ldexp(1.0, self.d as i32)
    }

    /// Largest magnitude representable: `2^(ell-1-d)`.
    pub fn max_magnitude(&self) -> f64 {
        libm::ldexp(1.0, (self.ell - 1 - self.d) as i32)
    }

    /// Products of two in-range values fit in 128 bits modulo `2^(ell+d)`.
    #[inline]
    fn narrow_products(&self) -> bool {
        self.ell + self.d <= 128
    }

    /// `round(r * 2^d) mod 2^ell`, rounding half away from zero. Exact for
    /// every finite `r`, including values far outside the ring.
    pub fn encode_raw(&self, r: f64) -> Result<u128, RingError> {
        if !r.is_finite() {
            return Err(RingError::NonFinite);
        }
        if r == 0.0 {
            return Ok(0);
        }
        let bits = r.to_bits();
        let negative = (bits >> 63) == 1;
        let exp_bits = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        // r = mant * 2^exp
        let (mant, exp) = if exp_bits == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp_bits - 1075) };
        let shift = exp + self.d as i32;
        let magnitude: u128 = if shift >= 0 {
            if shift >= 128 {
                0
            } else {
                (mant as u128).wrapping_shl(shift as u32)
            }
        } else {
            let down = (-shift) as u32;
            if down > 64 {
                0
            } else {
                let q = if down == 64 { 0 } else { (mant >> down) as u128 };
                let half_bit = (mant >> (down - 1)) & 1;
                q + half_bit as u128
            }
        };
        let raw = if negative { magnitude.wrapping_neg() } else { magnitude };
        Ok(raw & self.mask())
    }

    /// `r` at double scale, `round(r * 2^(2d)) = hi * 2^d + lo` with
    /// `0 <= lo < 2^d`. Adding `hi * one + lo * 1` to a double-width
    /// accumulator before its truncation adds `r` with no rounding of its
    /// own.
    pub fn encode_split(&self, r: f64) -> Result<(u128, u128), RingError> {
        if !r.is_finite() {
            return Err(RingError::NonFinite);
        }
        let d = self.d as i32;
        let scaled = libm::ldexp(r, d);
        if !scaled.is_finite() || scaled.abs() >= 4503599627370496.0 {
            // already an integer at scale d
            return Ok((self.encode_raw(r)?, 0));
        }
        let fl = libm::floor(scaled);
        let lo = libm::round(libm::ldexp(scaled - fl, d));
        let hi = self.encode_raw(libm::ldexp(fl, -d))?;
        if lo >= self.scale() {
            Ok((raw::add(self, hi, 1), 0))
        } else {
            Ok((hi, lo as u128))
        }
    }
}

impl fmt::Display for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R<{},{}>", self.ell, self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingVal {
    raw: u128,
    spec: RingSpec,
}

impl RingVal {
    pub fn from_raw(raw: u128, spec: RingSpec) -> Self {
        RingVal { raw: raw & spec.mask(), spec }
    }

    pub fn zero(spec: RingSpec) -> Self {
        RingVal { raw: 0, spec }
    }

    pub fn one(spec: RingSpec) -> Self {
        RingVal { raw: spec.one_raw(), spec }
    }

    /// An unscaled selector bit.
    pub fn bit(b: bool, spec: RingSpec) -> Self {
        RingVal { raw: b as u128, spec }
    }

    pub fn raw(&self) -> u128 {
        self.raw
    }

    pub fn spec(&self) -> RingSpec {
        self.spec
    }

    pub fn signed(&self) -> i128 {
        self.spec.signed(self.raw)
    }
}

/// Wrapping encode. Panics only on non-finite input; use [`encode_checked`]
/// for a fallible version.
pub fn encode(r: f64, spec: RingSpec) -> RingVal {
    match spec.encode_raw(r) {
        Ok(raw) => RingVal { raw, spec },
        Err(e) => panic!("encode: {e}"),
    }
}

/// Encode that rejects magnitudes at or above `2^(ell-1-d)`.
pub fn encode_checked(r: f64, spec: RingSpec) -> Result<RingVal, RingError> {
    let raw = spec.encode_raw(r)?;
    if r.abs() >= spec.max_magnitude() {
        return Err(RingError::OutOfRange { value: r, spec, bits: spec.ell - 1 - spec.d });
    }
    Ok(RingVal { raw, spec })
}

pub fn decode(v: RingVal) -> f64 {
    v.signed() as f64 / v.spec.scale()
}

fn same(a: &RingVal, b: &RingVal) -> Result<RingSpec, RingError> {
    if a.spec != b.spec {
        Err(RingError::SpecMismatch(a.spec, b.spec))
    } else {
        Ok(a.spec)
    }
}

pub fn add(a: RingVal, b: RingVal) -> Result<RingVal, RingError> {
    let spec = same(&a, &b)?;
    Ok(RingVal { raw: a.raw.wrapping_add(b.raw) & spec.mask(), spec })
}

pub fn sub(a: RingVal, b: RingVal) -> Result<RingVal, RingError> {
    let spec = same(&a, &b)?;
    Ok(RingVal { raw: a.raw.wrapping_sub(b.raw) & spec.mask(), spec })
}

pub fn mul_trunc(a: RingVal, b: RingVal) -> Result<RingVal, RingError> {
    let spec = same(&a, &b)?;
    Ok(RingVal { raw: raw::mul_trunc(&spec, a.raw, b.raw), spec })
}

/// `1` iff `signed(a) > signed(b)`, as an unscaled bit.
pub fn cmp_gt(a: RingVal, b: RingVal) -> Result<RingVal, RingError> {
    let spec = same(&a, &b)?;
    Ok(RingVal { raw: (a.signed() > b.signed()) as u128, spec })
}

/// `bit * v` without truncation; `bit` must be 0 or 1.
pub fn select(bit: RingVal, v: RingVal) -> Result<RingVal, RingError> {
    let spec = same(&bit, &v)?;
    if bit.raw > 1 {
        return Err(RingError::NotABit(bit.raw));
    }
    Ok(RingVal { raw: bit.raw * v.raw, spec })
}

/// `floor(sum_i signed(a_i) * signed(b_i) / 2^d) mod 2^ell`, one truncation
/// for the whole dot product.
pub fn dot_trunc(a: &[RingVal], b: &[RingVal]) -> Result<RingVal, RingError> {
    let spec = match (a.first(), b.first()) {
        (Some(x), _) => x.spec,
        (None, Some(y)) => y.spec,
        (None, None) => return Err(RingError::InvalidSpec { ell: 0, d: 0 }),
    };
    for v in a.iter().chain(b.iter()) {
        if v.spec != spec {
            return Err(RingError::SpecMismatch(spec, v.spec));
        }
    }
    let n = a.len().min(b.len());
    let raw = raw::dot_trunc(&spec, n, |i| a[i].raw, |i| b[i].raw);
    Ok(RingVal { raw, spec })
}

/// Raw-residue kernels shared by the plaintext evaluator, the share
/// emulator and the fixed-point network.
pub mod raw {
    use super::{RingSpec, U256};

    #[inline]
    pub fn add(spec: &RingSpec, a: u128, b: u128) -> u128 {
        a.wrapping_add(b) & spec.mask()
    }

    #[inline]
    pub fn sub(spec: &RingSpec, a: u128, b: u128) -> u128 {
        a.wrapping_sub(b) & spec.mask()
    }

    /// Multiply by a public integer, no truncation.
    #[inline]
    pub fn mul_int(spec: &RingSpec, a: u128, c: i64) -> u128 {
        a.wrapping_mul(c as i128 as u128) & spec.mask()
    }

    #[inline]
    pub fn cmp_gt(spec: &RingSpec, a: u128, b: u128) -> u128 {
        (spec.signed(a) > spec.signed(b)) as u128
    }

    #[inline]
    pub fn mul_trunc(spec: &RingSpec, a: u128, b: u128) -> u128 {
        dot_trunc(spec, 1, |_| a, |_| b)
    }

    /// Bits `[d, d + ell)` of the exact signed sum of products. Only the sum
    /// modulo `2^(ell+d)` matters, so the accumulation wraps in 128 bits
    /// when `ell + d <= 128` and in 256 bits otherwise.
    #[inline]
    pub fn dot_trunc(spec: &RingSpec, n: usize, a: impl Fn(usize) -> u128, b: impl Fn(usize) -> u128) -> u128 {
        let d = spec.d();
        if spec.narrow_products() {
            let mut acc: u128 = 0;
            for i in 0..n {
                let x = spec.signed(a(i)) as u128;
                let y = spec.signed(b(i)) as u128;
                acc = acc.wrapping_add(x.wrapping_mul(y));
            }
            (acc >> d) & spec.mask()
        } else {
            let mut acc = U256::ZERO;
            for i in 0..n {
                let x = U256::from_i128(spec.signed(a(i)));
                let y = U256::from_i128(spec.signed(b(i)));
                acc = acc.wrapping_add(x.wrapping_mul(y));
            }
            acc.shr(d).lo & spec.mask()
        }
    }

    /// Same as [`dot_trunc`] but always through the 256-bit path; used to
    /// cross-check the narrow path.
    pub fn dot_trunc_wide(spec: &RingSpec, n: usize, a: impl Fn(usize) -> u128, b: impl Fn(usize) -> u128) -> u128 {
        let mut acc = U256::ZERO;
        for i in 0..n {
            acc = acc.wrapping_add(U256::from_i128(spec.signed(a(i))).wrapping_mul(U256::from_i128(spec.signed(b(i)))));
        }
        acc.shr(spec.d()).lo & spec.mask()
    }
}
