//! PMM through crossbar-resident transform matrices.
//!
//! Instead of mapping an operand's convolution matrix, this path programs
//! the forward and inverse transform matrices onto bit-mapped arrays. One
//! multiplication then takes three analog matrix-vector passes (forward A,
//! forward B, inverse of the pointwise product) with digital modular glue
//! between them. On noise-free arrays the result is exact; the purpose of
//! the path is comparing noise sensitivity against the direct convolution
//! mapping under the same array model, ADC, and noise knobs.

use crate::error::{Error, Result};
use crate::mapping::{plan_for_weights, DenseWeights, MappingMode, MappingPlan, PlanOptions};
use crate::ring::ntt::{mod_mul, ntt_context_new, NttContext};
use crate::ring::{check_operand, pmm_reference, Polynomial};
use crate::xbar::CrossbarArray;

use super::pipeline::{self, PipelineTrace};
use super::{bit_mapped_wide, row_sliced_bits, ErrorStats, FabricConfig};

/// One programmed transform matrix (forward or inverse).
struct TwiddlePass {
    plan: MappingPlan,
    arrays: Vec<CrossbarArray>,
}

impl TwiddlePass {
    fn new(weights: &DenseWeights, cfg: &FabricConfig) -> Result<Self> {
        let plan = plan_for_weights(
            weights,
            cfg.ring.k,
            &cfg.xbar,
            PlanOptions {
                mode: MappingMode::BitMapping,
                array_budget: cfg.array_budget,
                dedup: cfg.dedup,
            },
        )?;
        let arrays = plan
            .physical
            .iter()
            .map(|tile| CrossbarArray::program(cfg.xbar, &tile.to_bytes()))
            .collect::<Result<Vec<_>>>()?;
        Ok(TwiddlePass { plan, arrays })
    }

    /// One analog pass: residues in, residues out. Wide column sums are
    /// reduced mod q digitally at the pass boundary.
    fn apply(&self, vals: &[u64], q: u64, noise_seed: Option<u64>, pass_id: u64) -> Result<Vec<u64>> {
        let slices = row_sliced_bits(vals, self.plan.k, self.plan.xbar.rows, self.plan.row_tiles);
        let wide = bit_mapped_wide(&self.plan, &self.arrays, &slices, noise_seed, pass_id)?;
        Ok(wide.iter().map(|&w| (w % q as u128) as u64).collect())
    }
}

/// Transform-domain PMM fabric. The mapping mode in the config is ignored;
/// twiddle matrices are always bit mapped.
pub struct NttFabric {
    cfg: FabricConfig,
    ctx: NttContext,
    forward: TwiddlePass,
    inverse: TwiddlePass,
}

impl NttFabric {
    /// Builds the transform context and programs both twiddle fabrics. The
    /// modulus must support the transform for this ring (q = 1 mod 2n for
    /// x^n + 1, q = 1 mod n for x^n - 1).
    pub fn new(cfg: FabricConfig) -> Result<Self> {
        cfg.validate()?;
        cfg.ring.check_exact_eval()?;
        let ctx = ntt_context_new(&cfg.ring)?;
        let n = cfg.ring.n;
        // The crossbar computes out[c] = sum_r W[r][c] * v[r], so each
        // transform matrix is programmed transposed.
        let mut fwd = Vec::with_capacity(n * n);
        let mut inv = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                fwd.push(ctx.forward_matrix_entry(c, r));
                inv.push(ctx.inverse_matrix_entry(c, r));
            }
        }
        let forward = TwiddlePass::new(&DenseWeights::new(n, n, fwd)?, &cfg)?;
        let inverse = TwiddlePass::new(&DenseWeights::new(n, n, inv)?, &cfg)?;
        Ok(NttFabric {
            cfg,
            ctx,
            forward,
            inverse,
        })
    }

    pub fn config(&self) -> &FabricConfig {
        &self.cfg
    }

    pub fn context(&self) -> &NttContext {
        &self.ctx
    }

    pub fn forward_plan(&self) -> &MappingPlan {
        &self.forward.plan
    }

    pub fn inverse_plan(&self) -> &MappingPlan {
        &self.inverse.plan
    }

    /// Physical arrays across both twiddle fabrics.
    pub fn physical_count(&self) -> usize {
        self.arrays_len()
    }

    fn arrays_len(&self) -> usize {
        self.forward.arrays.len() + self.inverse.arrays.len()
    }

    fn pmm(&self, a: &Polynomial, b: &Polynomial, noise_seed: Option<u64>) -> Result<Polynomial> {
        let p = &self.cfg.ring;
        check_operand(a, p)?;
        check_operand(b, p)?;
        let q = p.q;
        let fa = self.forward.apply(a.coeffs(), q, noise_seed, 0)?;
        let fb = self.forward.apply(b.coeffs(), q, noise_seed, 1)?;
        let prod: Vec<u64> = fa
            .iter()
            .zip(&fb)
            .map(|(&x, &y)| mod_mul(x, y, q))
            .collect();
        let out = self.inverse.apply(&prod, q, noise_seed, 2)?;
        Polynomial::new(out, p)
    }

    /// Noise-free transform-domain PMM; equals the exact reference.
    pub fn pmm_exact(&self, a: &Polynomial, b: &Polynomial) -> Result<Polynomial> {
        self.pmm(a, b, None)
    }

    /// Transform-domain PMM with the analog noise model applied to every
    /// pass. Deterministic per seed.
    pub fn pmm_noisy(&self, a: &Polynomial, b: &Polynomial, seed: u64) -> Result<Polynomial> {
        self.pmm(a, b, Some(seed))
    }

    pub fn pmm_noisy_with_stats(
        &self,
        a: &Polynomial,
        b: &Polynomial,
        seed: u64,
    ) -> Result<(Polynomial, ErrorStats)> {
        let got = self.pmm_noisy(a, b, seed)?;
        let want = pmm_reference(a, b, &self.cfg.ring)?;
        let stats = ErrorStats::compare(&got, &want, self.cfg.ring.q)?;
        Ok((got, stats))
    }

    /// Structural trace for a batch of transform-domain PMMs. Each PMM is
    /// three pipeline operations (two forward passes, one inverse), so the
    /// trace holds 3 * batch operations. Digital reduction work per PMM:
    /// one modular fold per output of each pass plus the n pointwise
    /// multiplies, 4n in total.
    pub fn trace(&self, batch: usize) -> Result<PipelineTrace> {
        if batch == 0 {
            return Err(Error::EmptyBatch);
        }
        let n = self.cfg.ring.n;
        let stage = pipeline::stage_cycles(&self.forward.plan, &self.cfg.timing, n);
        let per_pass = pipeline::event_counters(&self.forward.plan, n, 1);
        let mut trace = pipeline::build_trace(stage, per_pass, 3 * batch)?;
        trace.counters.reduction_ops += (n * batch) as u64;
        Ok(trace)
    }
}
