//! Polynomial rings Z_q[x]/(x^n + 1) and Z_q[x]/(x^n - 1), with the exact
//! reference path for polynomial modular multiplication (PMM).
//!
//! The reference path is schoolbook: a length-(2n-1) linear convolution in
//! exact integer arithmetic, a degree fold against the modulus polynomial,
//! and a plain remainder per coefficient. Every other PMM route in this
//! crate (Barrett-reduced fabric output, NTT, NTT-on-crossbar) is checked
//! against [`pmm_reference`].

pub mod barrett;
pub mod ntt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Modulus polynomial selecting the ring flavor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusPoly {
    /// x^n + 1 (negacyclic convolution).
    XnPlus1,
    /// x^n - 1 (cyclic convolution).
    XnMinus1,
}

impl ModulusPoly {
    pub fn as_str(self) -> &'static str {
        match self {
            ModulusPoly::XnPlus1 => "x^n+1",
            ModulusPoly::XnMinus1 => "x^n-1",
        }
    }
}

/// Parameters of the coefficient ring Z_q[x]/phi.
///
/// `k` is the coefficient bit width, derived from `q`: 2^(k-1) < q < 2^k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingParams {
    pub n: usize,
    pub q: u64,
    pub k: u32,
    pub phi: ModulusPoly,
}

pub const MIN_DEGREE: usize = 4;
pub const MAX_DEGREE: usize = 8192;
pub const MIN_BITS: u32 = 2;
pub const MAX_BITS: u32 = 64;

impl RingParams {
    /// Builds and validates ring parameters. The bit width is derived from
    /// the modulus.
    pub fn new(n: usize, q: u64, phi: ModulusPoly) -> Result<Self> {
        let k = bits_of(q);
        let p = RingParams { n, q, k, phi };
        p.validate()?;
        Ok(p)
    }

    /// Revalidates parameters, for instances built by deserialization.
    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < MIN_DEGREE || self.n > MAX_DEGREE {
            return Err(Error::InvalidRing(format!(
                "degree {} must be a power of two in [{MIN_DEGREE}, {MAX_DEGREE}]",
                self.n
            )));
        }
        if self.k < MIN_BITS || self.k > MAX_BITS || bits_of(self.q) != self.k {
            return Err(Error::InvalidModulus {
                q: self.q,
                k: self.k,
            });
        }
        if self.q.is_multiple_of(2) {
            return Err(Error::InvalidModulus {
                q: self.q,
                k: self.k,
            });
        }
        Ok(())
    }

    /// Upper bound, in bits, of any unreduced convolution value for this
    /// ring: n * (q-1)^2 < 2^(2k + log2(n)).
    pub fn wide_bits(&self) -> u32 {
        2 * self.k + self.n.trailing_zeros()
    }

    /// True when unreduced sums (plus one sign bit for the degree fold) fit
    /// the 128-bit accumulators used by the functional paths. Structural
    /// paths (planning, cycle and cost models) have no such limit.
    pub fn supports_exact_eval(&self) -> bool {
        self.wide_bits() < 128
    }

    /// Number of 2k-bit limbs the reduction stage folds per output
    /// coefficient: ceil(wide_bits / 2k), at least one.
    pub fn reduce_limbs(&self) -> u32 {
        self.wide_bits().div_ceil(2 * self.k).max(1)
    }

    pub fn check_exact_eval(&self) -> Result<()> {
        if self.supports_exact_eval() {
            Ok(())
        } else {
            Err(Error::UnsupportedParameters(format!(
                "unreduced sums for n={} k={} need {} bits, exceeding the 128-bit accumulators",
                self.n,
                self.k,
                self.wide_bits() + 1
            )))
        }
    }
}

/// Number of bits needed to represent `q` (position of the highest set bit).
pub fn bits_of(q: u64) -> u32 {
    64 - q.leading_zeros()
}

/// Largest odd modulus with the given bit width, the default when only a
/// bit width is specified.
pub fn default_modulus(k: u32) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// Residue polynomial of degree < n with coefficients in [0, q).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<u64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<u64>, p: &RingParams) -> Result<Self> {
        if coeffs.len() != p.n {
            return Err(Error::ShapeMismatch {
                context: "polynomial coefficients",
                expected: p.n,
                got: coeffs.len(),
            });
        }
        if let Some(&c) = coeffs.iter().find(|&&c| c >= p.q) {
            return Err(Error::RangeExceeded {
                value: c as u128,
                bound: p.q as u128,
            });
        }
        Ok(Polynomial { coeffs })
    }

    pub fn zero(p: &RingParams) -> Self {
        Polynomial {
            coeffs: vec![0; p.n],
        }
    }

    /// The constant polynomial 1.
    pub fn one(p: &RingParams) -> Self {
        let mut coeffs = vec![0; p.n];
        coeffs[0] = 1;
        Polynomial { coeffs }
    }

    pub fn random<R: Rng + ?Sized>(p: &RingParams, rng: &mut R) -> Self {
        let coeffs = (0..p.n).map(|_| rng.gen_range(0..p.q)).collect();
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn into_coeffs(self) -> Vec<u64> {
        self.coeffs
    }
}

/// Unreduced linear convolution output: 2n-1 exact integer values bounded
/// by n * (q-1)^2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WideVector {
    vals: Vec<u128>,
}

impl WideVector {
    /// Wraps raw accumulator values. Length must be 2n-1 for the ring.
    pub fn new(vals: Vec<u128>, p: &RingParams) -> Result<Self> {
        if vals.len() != 2 * p.n - 1 {
            return Err(Error::ShapeMismatch {
                context: "wide vector",
                expected: 2 * p.n - 1,
                got: vals.len(),
            });
        }
        Ok(WideVector { vals })
    }

    pub fn vals(&self) -> &[u128] {
        &self.vals
    }
}

/// Schoolbook linear convolution of two ring elements in exact integer
/// arithmetic: out[i] = sum over j+l=i of a[j]*b[l].
pub fn poly_mul_conv1d(a: &Polynomial, b: &Polynomial, p: &RingParams) -> Result<WideVector> {
    check_operand(a, p)?;
    check_operand(b, p)?;
    p.check_exact_eval()?;
    let n = p.n;
    let mut vals = vec![0u128; 2 * n - 1];
    for (j, &aj) in a.coeffs.iter().enumerate() {
        if aj == 0 {
            continue;
        }
        let aj = aj as u128;
        for (l, &bl) in b.coeffs.iter().enumerate() {
            vals[j + l] += aj * bl as u128;
        }
    }
    Ok(WideVector { vals })
}

/// Folds a length-(2n-1) convolution down to n terms against the modulus
/// polynomial: out[i] = w[i] - w[i+n] for x^n+1, w[i] + w[i+n] for x^n-1.
/// Values are exact signed integers, not yet reduced mod q.
pub fn reduce_degree(w: &WideVector, p: &RingParams) -> Result<Vec<i128>> {
    if w.vals.len() != 2 * p.n - 1 {
        return Err(Error::ShapeMismatch {
            context: "wide vector",
            expected: 2 * p.n - 1,
            got: w.vals.len(),
        });
    }
    let n = p.n;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = w.vals[i] as i128;
        let hi = if i + n < w.vals.len() {
            w.vals[i + n] as i128
        } else {
            0
        };
        out.push(match p.phi {
            ModulusPoly::XnPlus1 => lo - hi,
            ModulusPoly::XnMinus1 => lo + hi,
        });
    }
    Ok(out)
}

/// Exact polynomial modular multiplication: convolution, degree fold, then
/// a plain remainder per coefficient. This is the oracle every other PMM
/// path is compared against; it never uses Barrett reduction.
pub fn pmm_reference(a: &Polynomial, b: &Polynomial, p: &RingParams) -> Result<Polynomial> {
    let w = poly_mul_conv1d(a, b, p)?;
    let folded = reduce_degree(&w, p)?;
    let q = p.q as i128;
    let coeffs = folded
        .into_iter()
        .map(|v| v.rem_euclid(q) as u64)
        .collect();
    Ok(Polynomial { coeffs })
}

/// Distance between two residues on the cycle Z_q: min(|x - y|, q - |x - y|).
/// This is the error metric for noisy outputs, where a wrapped value like
/// q - 1 vs 0 counts as distance 1, not q - 1.
pub fn modular_distance(x: u64, y: u64, q: u64) -> u64 {
    debug_assert!(x < q && y < q);
    let d = x.abs_diff(y);
    d.min(q - d)
}

pub(crate) fn check_operand(a: &Polynomial, p: &RingParams) -> Result<()> {
    if a.coeffs.len() != p.n {
        return Err(Error::RingMismatch(format!(
            "operand has {} coefficients, ring degree is {}",
            a.coeffs.len(),
            p.n
        )));
    }
    if let Some(&c) = a.coeffs.iter().find(|&&c| c >= p.q) {
        return Err(Error::RingMismatch(format!(
            "coefficient {c} is not a residue mod {}",
            p.q
        )));
    }
    Ok(())
}
