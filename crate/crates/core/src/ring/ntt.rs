//! Number-theoretic transform over Z_q, used as the second exact PMM route
//! and as the arithmetic behind the NTT-on-crossbar fabric.
//!
//! For x^n + 1 the negacyclic transform premultiplies by powers of psi, a
//! primitive 2n-th root of unity with psi^2 = omega. For x^n - 1 the plain
//! cyclic transform with a primitive n-th root omega suffices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{check_operand, ModulusPoly, Polynomial, RingParams};

/// Root search scans candidates from 2 upward; moduli whose smallest
/// suitable root lies beyond this cap are rejected rather than looping
/// near-forever. All practically transform-friendly moduli in this
/// project's range resolve within a few candidates.
const ROOT_SEARCH_CAP: u64 = 1 << 22;

/// Precomputed transform context for one ring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NttContext {
    pub params: RingParams,
    /// Primitive n-th root of unity.
    pub omega: u64,
    pub omega_inv: u64,
    /// Primitive 2n-th root with psi^2 = omega; present only for x^n + 1.
    pub psi: Option<u64>,
    /// psi^i for i in [0, n).
    psi_powers: Vec<u64>,
    /// psi^(-i) for i in [0, n).
    psi_inv_powers: Vec<u64>,
    pub n_inv: u64,
}

/// Builds the transform context, searching for the smallest suitable root
/// and verifying its multiplicative order.
pub fn ntt_context_new(p: &RingParams) -> Result<NttContext> {
    p.validate()?;
    let n = p.n as u64;
    let q = p.q;
    let (omega, psi) = match p.phi {
        ModulusPoly::XnPlus1 => {
            if !(q - 1).is_multiple_of(2 * n) {
                return Err(Error::UnsupportedParameters(format!(
                    "q = {q} is not congruent to 1 mod 2n = {}",
                    2 * n
                )));
            }
            // psi has order exactly 2n iff psi^n = -1 (n is a power of two).
            let psi = smallest_root(q, n)?;
            (mod_mul(psi, psi, q), Some(psi))
        }
        ModulusPoly::XnMinus1 => {
            if !(q - 1).is_multiple_of(n) {
                return Err(Error::UnsupportedParameters(format!(
                    "q = {q} is not congruent to 1 mod n = {n}"
                )));
            }
            (smallest_root(q, n / 2)?, None)
        }
    };
    // Order verification; also guards composite moduli where the search
    // can succeed without yielding a well-formed transform.
    if mod_pow(omega, n, q) != 1 || mod_pow(omega, n / 2, q) != q - 1 {
        return Err(Error::UnsupportedParameters(format!(
            "candidate omega = {omega} does not have order {n} mod {q}"
        )));
    }
    if let Some(ps) = psi {
        debug_assert_eq!(mod_mul(ps, ps, q), omega);
    }
    let n_inv = mod_inverse(n % q, q).ok_or_else(|| {
        Error::UnsupportedParameters(format!("degree {n} is not invertible mod {q}"))
    })?;
    let omega_inv = mod_pow(omega, n - 1, q);
    let (psi_powers, psi_inv_powers) = match psi {
        Some(ps) => {
            let ps_inv = mod_pow(ps, 2 * n - 1, q);
            (power_table(ps, p.n, q), power_table(ps_inv, p.n, q))
        }
        None => (Vec::new(), Vec::new()),
    };
    Ok(NttContext {
        params: *p,
        omega,
        omega_inv,
        psi,
        psi_powers,
        psi_inv_powers,
        n_inv,
    })
}

impl NttContext {
    /// psi^i, defined only for x^n + 1 contexts.
    pub fn psi_power(&self, i: usize) -> u64 {
        self.psi_powers[i]
    }

    pub fn psi_inv_power(&self, i: usize) -> u64 {
        self.psi_inv_powers[i]
    }

    /// Entry (i, j) of the forward transform matrix: psi^j * omega^(ij)
    /// for x^n + 1, omega^(ij) for x^n - 1.
    pub fn forward_matrix_entry(&self, i: usize, j: usize) -> u64 {
        let q = self.params.q;
        let w = mod_pow(self.omega, (i as u64 * j as u64) % self.params.n as u64, q);
        match self.psi {
            Some(_) => mod_mul(self.psi_powers[j], w, q),
            None => w,
        }
    }

    /// Entry (i, j) of the inverse transform matrix, with the 1/n scaling
    /// folded in: n_inv * psi^(-i) * omega^(-ij) for x^n + 1.
    pub fn inverse_matrix_entry(&self, i: usize, j: usize) -> u64 {
        let q = self.params.q;
        let w = mod_pow(
            self.omega_inv,
            (i as u64 * j as u64) % self.params.n as u64,
            q,
        );
        let scaled = mod_mul(self.n_inv, w, q);
        match self.psi {
            Some(_) => mod_mul(self.psi_inv_powers[i], scaled, q),
            None => scaled,
        }
    }
}

/// Forward transform of a ring element, natural order in and out.
pub fn ntt_forward(a: &Polynomial, ctx: &NttContext) -> Result<Vec<u64>> {
    check_operand(a, &ctx.params)?;
    let q = ctx.params.q;
    let mut vals: Vec<u64> = a.coeffs().to_vec();
    if ctx.psi.is_some() {
        for (i, v) in vals.iter_mut().enumerate() {
            *v = mod_mul(*v, ctx.psi_powers[i], q);
        }
    }
    dft_in_place(&mut vals, ctx.omega, q);
    Ok(vals)
}

/// Inverse transform back to coefficient form.
pub fn ntt_inverse(vals: &[u64], ctx: &NttContext) -> Result<Polynomial> {
    let p = &ctx.params;
    if vals.len() != p.n {
        return Err(Error::ShapeMismatch {
            context: "transform values",
            expected: p.n,
            got: vals.len(),
        });
    }
    let q = p.q;
    let mut out: Vec<u64> = vals.to_vec();
    dft_in_place(&mut out, ctx.omega_inv, q);
    for (i, v) in out.iter_mut().enumerate() {
        *v = mod_mul(*v, ctx.n_inv, q);
        if ctx.psi.is_some() {
            *v = mod_mul(*v, ctx.psi_inv_powers[i], q);
        }
    }
    Polynomial::new(out, p)
}

/// PMM through the transform domain: forward both operands, multiply
/// pointwise, transform back. Exact; must agree with `pmm_reference`.
pub fn pmm_via_ntt(a: &Polynomial, b: &Polynomial, ctx: &NttContext) -> Result<Polynomial> {
    let q = ctx.params.q;
    let fa = ntt_forward(a, ctx)?;
    let fb = ntt_forward(b, ctx)?;
    let prod: Vec<u64> = fa
        .iter()
        .zip(fb.iter())
        .map(|(&x, &y)| mod_mul(x, y, q))
        .collect();
    ntt_inverse(&prod, ctx)
}

/// Smallest x >= 2 with x^half = -1 mod q, i.e. the smallest element of
/// order exactly 2*half when half is a power of two.
fn smallest_root(q: u64, half: u64) -> Result<u64> {
    let cap = ROOT_SEARCH_CAP.min(q);
    for x in 2..cap {
        if mod_pow(x, half, q) == q - 1 {
            return Ok(x);
        }
    }
    Err(Error::UnsupportedParameters(format!(
        "no root of order {} found mod {q} (searched up to {cap})",
        2 * half
    )))
}

/// In-place transform vals[i] <- sum_j vals[j] * root^(ij), iterative
/// radix-2 with a bit-reversal permutation up front.
fn dft_in_place(vals: &mut [u64], root: u64, q: u64) {
    let n = vals.len();
    debug_assert!(n.is_power_of_two());
    let log_n = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - log_n);
        if i < j {
            vals.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let w_len = mod_pow(root, (n / len) as u64, q);
        for start in (0..n).step_by(len) {
            let mut w = 1u64;
            for i in start..start + len / 2 {
                let even = vals[i];
                let odd = mod_mul(vals[i + len / 2], w, q);
                vals[i] = mod_add(even, odd, q);
                vals[i + len / 2] = mod_sub(even, odd, q);
                w = mod_mul(w, w_len, q);
            }
        }
        len <<= 1;
    }
}

fn power_table(base: u64, n: usize, q: u64) -> Vec<u64> {
    let mut table = Vec::with_capacity(n);
    let mut acc = 1u64;
    for _ in 0..n {
        table.push(acc);
        acc = mod_mul(acc, base, q);
    }
    table
}

pub fn mod_add(a: u64, b: u64, q: u64) -> u64 {
    let s = (a as u128 + b as u128) % q as u128;
    s as u64
}

pub fn mod_sub(a: u64, b: u64, q: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        q - (b - a)
    }
}

pub fn mod_mul(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

pub fn mod_pow(mut base: u64, mut exp: u64, q: u64) -> u64 {
    base %= q;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mod_mul(acc, base, q);
        }
        base = mod_mul(base, base, q);
        exp >>= 1;
    }
    acc
}

/// Modular inverse by extended Euclid; works for any modulus, prime or not,
/// as long as gcd(a, q) = 1.
pub fn mod_inverse(a: u64, q: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128, q as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(q as i128) as u64)
}
