//! 256-bit wrapping integer, just enough for double-width fixed-point products
//! when `ell + d > 128`.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) struct U256 {
    pub lo: u128,
    pub hi: u128,
}

impl U256 {
    pub const ZERO: U256 = U256 { lo: 0, hi: 0 };

    /// Sign-extends a 128-bit two's-complement value.
    pub fn from_i128(v: i128) -> U256 {
        U256 { lo: v as u128, hi: if v < 0 { u128::MAX } else { 0 } }
    }

    pub fn wrapping_add(self, o: U256) -> U256 {
        let (lo, carry) = self.lo.overflowing_add(o.lo);
        U256 { lo, hi: self.hi.wrapping_add(o.hi).wrapping_add(carry as u128) }
    }

    /// Low 256 bits of the product.
    pub fn wrapping_mul(self, o: U256) -> U256 {
        let a = self.limbs();
        let b = o.limbs();
        let mut out = [0u64; 4];
        for i in 0..4 {
            let mut carry: u128 = 0;
            for j in 0..(4 - i) {
                let cur = out[i + j] as u128 + (a[i] as u128) * (b[j] as u128) + carry;
                out[i + j] = cur as u64;
                carry = cur >> 64;
            }
        }
        U256 { lo: out[0] as u128 | (out[1] as u128) << 64, hi: out[2] as u128 | (out[3] as u128) << 64 }
    }

    /// Logical right shift, `0 <= n < 256`.
    pub fn shr(self, n: u32) -> U256 {
        match n {
            0 => self,
            1..=127 => U256 { lo: (self.lo >> n) | (self.hi << (128 - n)), hi: self.hi >> n },
            128..=255 => U256 { lo: self.hi >> (n - 128), hi: 0 },
            _ => U256::ZERO,
        }
    }

    fn limbs(self) -> [u64; 4] {
        [self.lo as u64, (self.lo >> 64) as u64, self.hi as u64, (self.hi >> 64) as u64]
    }
}
