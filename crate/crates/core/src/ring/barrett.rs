//! Barrett modular reduction.
//!
//! Precomputes mu = floor(2^m / q) with m = 2k so that reduction needs only
//! multiplications, shifts, and conditional subtractions; no division or
//! remainder instruction is ever executed on the reduction path.
//!
//! A single Barrett pass with at most two trailing subtractions is exact
//! for inputs below 2^m. Wider inputs, up to the admissible bound q * 2^m,
//! get a second multiply-shift pass before the subtractions, which keeps
//! the result bit-identical to `x mod q` over the whole admissible range.

use crate::error::{Error, Result};

/// Precomputed reduction constants for a fixed modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BarrettParams {
    q: u64,
    m: u32,
    mu: u128,
}

impl BarrettParams {
    /// Precomputes mu = floor(2^(2k) / q). The modulus must be odd and have
    /// exactly `k` bits.
    pub fn new(q: u64, k: u32) -> Result<Self> {
        if !(2..=64).contains(&k) || q.is_multiple_of(2) || super::bits_of(q) != k {
            return Err(Error::InvalidModulus { q, k });
        }
        let m = 2 * k;
        let mu = if m == 128 {
            // floor(2^128 / q) == floor((2^128 - 1) / q) because an odd
            // q > 1 never divides a power of two.
            u128::MAX / q as u128
        } else {
            (1u128 << m) / q as u128
        };
        let p = BarrettParams { q, m, mu };
        debug_assert!(p.constants_consistent());
        Ok(p)
    }

    /// Deliberately corrupted constants for soundness checks: mu is off by
    /// one, so quotient estimates overshoot on a large share of inputs and
    /// downstream results disagree with the exact reference. The reduction
    /// still never panics with these constants.
    pub fn fault_injected(q: u64, k: u32) -> Result<Self> {
        let honest = Self::new(q, k)?;
        Ok(BarrettParams {
            mu: honest.mu + 1,
            ..honest
        })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn mu(&self) -> u128 {
        self.mu
    }

    /// mu * q <= 2^m < (mu + 1) * q.
    fn constants_consistent(&self) -> bool {
        let q = self.q as u128;
        let muq = match self.mu.checked_mul(q) {
            Some(v) => v,
            None => return false,
        };
        if self.m == 128 {
            // 2^128 is one past u128::MAX; both sides hold iff
            // mu*q <= MAX and MAX - muq < q.
            u128::MAX - muq < q
        } else {
            let pow = 1u128 << self.m;
            muq <= pow && pow < muq + q
        }
    }

    /// Exclusive admissible input bound q * 2^m, or None when it exceeds
    /// the 128-bit input type (every representable input is admissible).
    pub fn admissible_bound(&self) -> Option<u128> {
        let qbits = 128 - (self.q as u128).leading_zeros();
        if qbits + self.m > 128 {
            None
        } else {
            Some((self.q as u128) << self.m)
        }
    }

    /// Reduces `x` to `x mod q` using multiply-shift passes plus at most
    /// two conditional subtractions.
    pub fn reduce(&self, x: u128) -> Result<u64> {
        if let Some(bound) = self.admissible_bound() {
            if x >= bound {
                return Err(Error::RangeExceeded { value: x, bound });
            }
        }
        let q = self.q as u128;
        let mut t = self.pass(x);
        // A single pass leaves t < q*(q+1); a second pass is needed only
        // when the input was at least 2^m wide.
        if self.m < 128 && (x >> self.m) != 0 {
            t = self.pass(t);
        }
        if t >= q {
            t -= q;
        }
        if t >= q {
            t -= q;
        }
        Ok(t as u64)
    }

    /// One Barrett pass: t = x - q * ((x * mu) >> m). With honest constants
    /// the quotient estimate never exceeds x / q, so the subtraction cannot
    /// underflow; saturation only matters for fault-injected constants.
    #[inline]
    fn pass(&self, x: u128) -> u128 {
        let qhat = mul_shift(x, self.mu, self.m);
        x.saturating_sub((self.q as u128).saturating_mul(qhat))
    }
}

/// (a * b) >> shift over the full 256-bit product, for 4 <= shift <= 128.
/// The callers guarantee the shifted result fits in 128 bits.
fn mul_shift(a: u128, b: u128, shift: u32) -> u128 {
    let (hi, lo) = mul_wide(a, b);
    if shift == 128 {
        hi
    } else {
        (lo >> shift) | (hi << (128 - shift))
    }
}

/// Full 256-bit product of two 128-bit values as (high, low) halves.
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    let (a1, a0) = (a >> 64, a & u64::MAX as u128);
    let (b1, b0) = (b >> 64, b & u64::MAX as u128);
    let ll = a0 * b0;
    let lh = a0 * b1;
    let hl = a1 * b0;
    let hh = a1 * b1;
    let mid = (ll >> 64) + (lh & u64::MAX as u128) + (hl & u64::MAX as u128);
    let lo = (mid << 64) | (ll & u64::MAX as u128);
    let hi = hh + (lh >> 64) + (hl >> 64) + (mid >> 64);
    (hi, lo)
}
