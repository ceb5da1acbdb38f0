//! Randomized equivalence harnesses. Every computing route (direct
//! fabric, transform fabric, software transform, Barrett constants) is
//! compared against an independent exact oracle over batches of random
//! inputs, in parallel, with deterministic per-trial seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fabric::ntt_on_xbar::NttFabric;
use crate::fabric::{mix_seed, Fabric, FabricConfig};
use crate::par;
use crate::ring::barrett::BarrettParams;
use crate::ring::ntt::{ntt_context_new, pmm_via_ntt};
use crate::ring::{pmm_reference, Polynomial, RingParams};

/// First failing trial of a batch, kept for diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mismatch {
    pub trial: usize,
    pub detail: String,
}

/// Outcome of one equivalence batch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub label: String,
    pub trials: usize,
    pub mismatches: usize,
    pub first_mismatch: Option<Mismatch>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }

    pub fn render_text(&self) -> String {
        match (&self.first_mismatch, self.mismatches) {
            (None, _) => format!("{}: {} trials, all matched", self.label, self.trials),
            (Some(m), c) => format!(
                "{}: {} trials, {} mismatches, first at trial {}: {}",
                self.label, self.trials, c, m.trial, m.detail
            ),
        }
    }

    /// Folds per-trial outcomes (`None` = match) into a report. Outcomes
    /// arrive in trial order, so the first `Some` is the first failure.
    fn from_outcomes(label: impl Into<String>, outcomes: Vec<Option<String>>) -> Self {
        let trials = outcomes.len();
        let mut mismatches = 0;
        let mut first = None;
        for (trial, outcome) in outcomes.into_iter().enumerate() {
            if let Some(detail) = outcome {
                mismatches += 1;
                if first.is_none() {
                    first = Some(Mismatch { trial, detail });
                }
            }
        }
        EquivalenceReport {
            label: label.into(),
            trials,
            mismatches,
            first_mismatch: first,
        }
    }
}

fn first_difference(got: &Polynomial, want: &Polynomial) -> Option<String> {
    got.coeffs()
        .iter()
        .zip(want.coeffs())
        .enumerate()
        .find(|(_, (g, w))| g != w)
        .map(|(i, (g, w))| format!("coeff {i}: got {g}, want {w}"))
}

/// Compares the direct-convolution fabric against the exact reference on
/// `pairs` random operand pairs. With `corrupt_reduction` the fabric's
/// digital reduction runs with a deliberately wrong Barrett constant, so
/// a healthy harness must then report mismatches.
pub fn fabric_vs_reference(
    cfg: FabricConfig,
    pairs: usize,
    seed: u64,
    corrupt_reduction: bool,
) -> Result<EquivalenceReport> {
    if pairs == 0 {
        return Err(Error::UnsupportedParameters("pairs must be positive".into()));
    }
    // Surface configuration problems once, up front, instead of as a
    // thousand identical per-trial failures.
    Fabric::new(&Polynomial::zero(&cfg.ring), cfg)?;
    let ring = cfg.ring;
    let outcomes = par::map_indexed(pairs, |pair| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, pair as u64]));
        let a = Polynomial::random(&ring, &mut rng);
        let b = Polynomial::random(&ring, &mut rng);
        let run = || -> Result<Option<String>> {
            let mut fabric = Fabric::new(&a, cfg)?;
            if corrupt_reduction {
                fabric.use_fault_injected_reduction();
            }
            let got = fabric.pmm_exact(&b)?;
            let want = pmm_reference(&a, &b, &ring)?;
            Ok(first_difference(&got, &want))
        };
        run().unwrap_or_else(|e| Some(format!("error: {e}")))
    });
    let label = format!(
        "fabric[n={} q={} {:?} {:?}{}] vs reference",
        ring.n,
        ring.q,
        ring.phi,
        cfg.mode,
        if corrupt_reduction { " corrupted" } else { "" }
    );
    Ok(EquivalenceReport::from_outcomes(label, outcomes))
}

/// Compares the transform fabric (crossbar forward passes, digital
/// pointwise multiply, crossbar inverse pass) against the reference.
pub fn ntt_fabric_vs_reference(
    cfg: FabricConfig,
    pairs: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    if pairs == 0 {
        return Err(Error::UnsupportedParameters("pairs must be positive".into()));
    }
    let fabric = NttFabric::new(cfg)?;
    let ring = cfg.ring;
    let outcomes = par::map_indexed(pairs, |pair| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, pair as u64]));
        let a = Polynomial::random(&ring, &mut rng);
        let b = Polynomial::random(&ring, &mut rng);
        let run = || -> Result<Option<String>> {
            let got = fabric.pmm_exact(&a, &b)?;
            let want = pmm_reference(&a, &b, &ring)?;
            Ok(first_difference(&got, &want))
        };
        run().unwrap_or_else(|e| Some(format!("error: {e}")))
    });
    let label = format!(
        "ntt-fabric[n={} q={} {:?}] vs reference",
        ring.n, ring.q, ring.phi
    );
    Ok(EquivalenceReport::from_outcomes(label, outcomes))
}

/// Compares the software transform-domain product against the reference.
pub fn ntt_software_vs_reference(
    ring: RingParams,
    pairs: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    if pairs == 0 {
        return Err(Error::UnsupportedParameters("pairs must be positive".into()));
    }
    let ctx = ntt_context_new(&ring)?;
    let outcomes = par::map_indexed(pairs, |pair| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, pair as u64]));
        let a = Polynomial::random(&ring, &mut rng);
        let b = Polynomial::random(&ring, &mut rng);
        let run = || -> Result<Option<String>> {
            let got = pmm_via_ntt(&a, &b, &ctx)?;
            let want = pmm_reference(&a, &b, &ring)?;
            Ok(first_difference(&got, &want))
        };
        run().unwrap_or_else(|e| Some(format!("error: {e}")))
    });
    let label = format!(
        "ntt-software[n={} q={} {:?}] vs reference",
        ring.n, ring.q, ring.phi
    );
    Ok(EquivalenceReport::from_outcomes(label, outcomes))
}

fn bit_length(q: u64) -> u32 {
    64 - q.leading_zeros()
}

fn check_barrett(bp: &BarrettParams, q: u64, x: u128) -> Option<String> {
    let want = (x % q as u128) as u64;
    match bp.reduce(x) {
        Ok(got) if got == want => None,
        Ok(got) => Some(format!("x={x}: got {got}, want {want}")),
        Err(e) => Some(format!("x={x}: error: {e}")),
    }
}

/// Compares Barrett reduction against the plain remainder on `samples`
/// random inputs over the full admissible range, plus a fixed premix of
/// boundary values.
pub fn barrett_vs_remainder(q: u64, samples: usize, seed: u64) -> Result<EquivalenceReport> {
    if samples == 0 {
        return Err(Error::UnsupportedParameters("samples must be positive".into()));
    }
    let k = bit_length(q);
    let bp = BarrettParams::new(q, k)?;
    let bound = bp.admissible_bound();
    let qq = q as u128;
    let m = 2 * k;
    let mut edges: Vec<u128> = vec![0, 1, qq - 1, qq, qq + 1];
    if m < 128 {
        edges.extend_from_slice(&[(1u128 << m) - 1, 1u128 << m, (1u128 << m) + 1]);
    }
    match bound {
        Some(b) => edges.push(b - 1),
        None => edges.push(u128::MAX),
    }
    edges.retain(|&x| bound.is_none_or(|b| x < b));
    edges.sort_unstable();
    edges.dedup();
    let total = edges.len() + samples;
    let outcomes = par::map_indexed(total, |i| {
        if i < edges.len() {
            return check_barrett(&bp, q, edges[i]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, i as u64]));
        let x = match bound {
            Some(b) => rng.gen_range(0..b),
            None => rng.gen::<u128>(),
        };
        check_barrett(&bp, q, x)
    });
    let label = format!("barrett[q={q} k={k}] vs remainder, random");
    Ok(EquivalenceReport::from_outcomes(label, outcomes))
}

/// Compares Barrett reduction against the plain remainder on every
/// admissible input. Only feasible for tiny moduli; the input count
/// q * 2^(2k) is capped at 2^26.
pub fn barrett_exhaustive(q: u64) -> Result<EquivalenceReport> {
    let k = bit_length(q);
    let bp = BarrettParams::new(q, k)?;
    let bound = bp
        .admissible_bound()
        .filter(|&b| b <= 1 << 26)
        .ok_or_else(|| {
            Error::UnsupportedParameters(format!(
                "exhaustive check over q * 2^{} inputs is too large for q={q}",
                2 * k
            ))
        })?;
    let outcomes = par::map_indexed(bound as usize, |x| check_barrett(&bp, q, x as u128));
    let label = format!("barrett[q={q} k={k}] vs remainder, exhaustive");
    Ok(EquivalenceReport::from_outcomes(label, outcomes))
}
