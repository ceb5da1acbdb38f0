//! The crossbar fabric: programmed arrays executing PMM end to end.
//!
//! A fabric holds one resident operand A, mapped onto physical arrays by a
//! [`MappingPlan`]. Multiplying by an input operand B streams the bits of
//! B through the arrays and runs the digital back end:
//!
//! - PE_COMPUTE: per input bit, every logical array performs a binary
//!   vector-matrix multiplication; row tiles combine through an adder
//!   tree; the temporal accumulate-shift weighs input bits by powers of
//!   two (most significant bit first).
//! - TILE_ACCUMULATE: PE outputs combine with their weight-bit shifts
//!   (bit mapping), or per-array weight groups combine column bits
//!   (conventional). The result is the unreduced convolution.
//! - TILE_REDUCE: degree fold against the modulus polynomial, then
//!   Barrett limb folding down to residues mod q.
//!
//! The same dataflow runs exactly or under the analog noise model; the
//! noisy path is a deterministic function of the seed.

pub mod ntt_on_xbar;
pub mod pipeline;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{MappingMode, MappingPlan, PlanOptions};
use crate::ring::barrett::BarrettParams;
use crate::ring::ntt::mod_pow;
use crate::ring::{modular_distance, ModulusPoly, Polynomial, RingParams};
use crate::xbar::{CrossbarArray, CrossbarConfig};
use pipeline::{PipelineTrace, StageTiming};

/// Default fabric clock in MHz.
pub const DEFAULT_FREQUENCY_MHZ: f64 = 400.0;

/// Everything needed to instantiate a fabric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FabricConfig {
    pub xbar: CrossbarConfig,
    pub ring: RingParams,
    pub mode: MappingMode,
    pub array_budget: Option<usize>,
    pub frequency_mhz: f64,
    pub timing: StageTiming,
    /// Share physical arrays between identical tiles. On by default;
    /// soundness checks turn it off to compare against fully
    /// materialized logical arrays.
    #[serde(default = "default_dedup")]
    pub dedup: bool,
}

fn default_dedup() -> bool {
    true
}

impl FabricConfig {
    pub fn new(ring: RingParams, mode: MappingMode) -> Self {
        FabricConfig {
            xbar: CrossbarConfig::default(),
            ring,
            mode,
            array_budget: None,
            frequency_mhz: DEFAULT_FREQUENCY_MHZ,
            timing: StageTiming::default(),
            dedup: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.xbar.validate()?;
        self.ring.validate()?;
        self.timing.validate()?;
        if !(self.frequency_mhz.is_finite() && self.frequency_mhz > 0.0) {
            return Err(Error::UnsupportedParameters(format!(
                "frequency_mhz must be positive, got {}",
                self.frequency_mhz
            )));
        }
        Ok(())
    }
}

/// A fabric with the resident operand programmed into its arrays.
pub struct Fabric {
    cfg: FabricConfig,
    generator: Polynomial,
    plan: MappingPlan,
    /// Programmed arrays, indexed by `LogicalTile::physical`.
    arrays: Vec<CrossbarArray>,
    barrett: BarrettParams,
    /// 2^(2k) mod q, the limb radix of the reduction stage.
    limb_radix: u64,
}

impl Fabric {
    /// Plans, deduplicates, and programs the resident operand. Functional
    /// simulation needs the ring to fit the 128-bit accumulators.
    pub fn new(a: &Polynomial, cfg: FabricConfig) -> Result<Self> {
        cfg.validate()?;
        cfg.ring.check_exact_eval()?;
        let m = crate::mapping::build_conv_matrix(a, &cfg.ring)?;
        let plan = crate::mapping::plan_for_weights(
            &m,
            cfg.ring.k,
            &cfg.xbar,
            PlanOptions {
                mode: cfg.mode,
                array_budget: cfg.array_budget,
                dedup: cfg.dedup,
            },
        )?;
        let arrays = plan
            .physical
            .iter()
            .map(|tile| CrossbarArray::program(cfg.xbar, &tile.to_bytes()))
            .collect::<Result<Vec<_>>>()?;
        let barrett = BarrettParams::new(cfg.ring.q, cfg.ring.k)?;
        let limb_radix = mod_pow(2, 2 * cfg.ring.k as u64, cfg.ring.q);
        Ok(Fabric {
            cfg,
            generator: a.clone(),
            plan,
            arrays,
            barrett,
            limb_radix,
        })
    }

    pub fn config(&self) -> &FabricConfig {
        &self.cfg
    }

    pub fn plan(&self) -> &MappingPlan {
        &self.plan
    }

    pub fn generator(&self) -> &Polynomial {
        &self.generator
    }

    pub fn barrett(&self) -> &BarrettParams {
        &self.barrett
    }

    /// Swaps in off-by-one Barrett constants. Soundness checks use this to
    /// confirm that a corrupted reduction stage is caught by comparison
    /// against the exact reference, not masked.
    pub fn use_fault_injected_reduction(&mut self) {
        self.barrett = BarrettParams::fault_injected(self.cfg.ring.q, self.cfg.ring.k)
            .expect("ring parameters were validated at construction");
    }

    /// Noise-free PMM through the full fabric dataflow.
    pub fn pmm_exact(&self, b: &Polynomial) -> Result<Polynomial> {
        let wide = self.compute_wide(b, None)?;
        self.reduce_wide(&wide)
    }

    /// PMM under the analog noise model. Deterministic per seed.
    pub fn pmm_noisy(&self, b: &Polynomial, seed: u64) -> Result<Polynomial> {
        let wide = self.compute_wide(b, Some(seed))?;
        self.reduce_wide(&wide)
    }

    /// Noisy PMM plus per-coefficient error statistics against the exact
    /// reference product.
    pub fn pmm_noisy_with_stats(
        &self,
        b: &Polynomial,
        seed: u64,
    ) -> Result<(Polynomial, ErrorStats)> {
        let got = self.pmm_noisy(b, seed)?;
        let want = crate::ring::pmm_reference(&self.generator, b, &self.cfg.ring)?;
        let stats = ErrorStats::compare(&got, &want, self.cfg.ring.q)?;
        Ok((got, stats))
    }

    /// Structural pipeline trace for a batch of PMMs on this fabric.
    pub fn trace(&self, batch: usize) -> Result<PipelineTrace> {
        let stage = pipeline::stage_cycles(&self.plan, &self.cfg.timing, self.cfg.ring.n);
        let per_op =
            pipeline::event_counters(&self.plan, self.cfg.ring.n, self.cfg.ring.reduce_limbs());
        pipeline::build_trace(stage, per_op, batch)
    }

    /// Unreduced convolution columns (2n-1 of them) out of the analog and
    /// combine stages.
    fn compute_wide(&self, b: &Polynomial, noise_seed: Option<u64>) -> Result<Vec<u128>> {
        crate::ring::check_operand(b, &self.cfg.ring)?;
        let slices = self.input_row_slices(b);
        match self.plan.mode {
            MappingMode::BitMapping => {
                bit_mapped_wide(&self.plan, &self.arrays, &slices, noise_seed, 0)
            }
            MappingMode::Conventional => self.compute_wide_conventional(&slices, noise_seed),
        }
    }

    /// Input bit vectors per (input bit, row tile), padded to the array
    /// height.
    fn input_row_slices(&self, b: &Polynomial) -> Vec<Vec<u8>> {
        row_sliced_bits(
            b.coeffs(),
            self.cfg.ring.k,
            self.cfg.xbar.rows,
            self.plan.row_tiles,
        )
    }

    fn compute_wide_conventional(
        &self,
        slices: &[Vec<u8>],
        noise_seed: Option<u64>,
    ) -> Result<Vec<u128>> {
        let k = self.cfg.ring.k as usize;
        let cols = self.cfg.xbar.cols;
        let row_tiles = self.plan.row_tiles;
        let col_tiles = self.plan.col_tiles;
        let wpa = self.plan.weights_per_array;
        let pe = &self.plan.pes[0];
        let mut acc = vec![0u128; col_tiles * wpa];
        let mut colsum = vec![0u64; cols];
        for t in (0..k).rev() {
            for v in acc.iter_mut() {
                *v <<= 1;
            }
            for tc in 0..col_tiles {
                colsum.iter_mut().for_each(|v| *v = 0);
                let mut touched = false;
                for tr in 0..row_tiles {
                    let tile = &pe.tiles[tr * col_tiles + tc];
                    let array = &self.arrays[tile.physical];
                    if noise_seed.is_none() && array.is_all_zero() {
                        continue;
                    }
                    let input = &slices[t * row_tiles + tr];
                    let out = match noise_seed {
                        None => array.vmm_exact(input)?,
                        Some(base) => array.vmm_noisy(
                            input,
                            mix_seed(&[base, 0, 0, t as u64, tr as u64, tc as u64]),
                        )?,
                    };
                    touched = true;
                    for (v, &code) in colsum.iter_mut().zip(&out.quantized) {
                        *v += code as u64;
                    }
                }
                if !touched {
                    continue;
                }
                for g in 0..wpa {
                    let mut group = 0u128;
                    for (j, &cs) in colsum[g * k..(g + 1) * k].iter().enumerate() {
                        group += (cs as u128) << (k - 1 - j);
                    }
                    acc[tc * wpa + g] += group;
                }
            }
        }
        acc.truncate(self.plan.weight_cols);
        Ok(acc)
    }

    /// Degree fold plus Barrett limb folding. The fold keeps magnitude and
    /// sign separate so nothing overflows; the final negation maps back
    /// into [0, q).
    fn reduce_wide(&self, wide: &[u128]) -> Result<Polynomial> {
        let p = &self.cfg.ring;
        let n = p.n;
        if wide.len() != 2 * n - 1 {
            return Err(Error::ShapeMismatch {
                context: "unreduced convolution columns",
                expected: 2 * n - 1,
                got: wide.len(),
            });
        }
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            let lo = wide[i];
            let hi = if i + n < wide.len() { wide[i + n] } else { 0 };
            let (mag, negate) = match p.phi {
                ModulusPoly::XnPlus1 => {
                    if lo >= hi {
                        (lo - hi, false)
                    } else {
                        (hi - lo, true)
                    }
                }
                ModulusPoly::XnMinus1 => {
                    let sum = lo.checked_add(hi).ok_or(Error::RangeExceeded {
                        value: u128::MAX,
                        bound: u128::MAX,
                    })?;
                    (sum, false)
                }
            };
            let r = self.reduce_magnitude(mag)?;
            coeffs.push(if negate && r != 0 { p.q - r } else { r });
        }
        Polynomial::new(coeffs, p)
    }

    /// Folds a wide magnitude limb by limb, most significant first:
    /// acc <- reduce(acc * 2^(2k) + limb). Every intermediate stays below
    /// 2^(2k+1), inside the admissible Barrett range.
    fn reduce_magnitude(&self, mag: u128) -> Result<u64> {
        let limb_bits = 2 * self.cfg.ring.k;
        let needed = if mag == 0 {
            1
        } else {
            (128 - mag.leading_zeros()).div_ceil(limb_bits).max(1)
        };
        // Noise can push magnitudes slightly past the noise-free bound;
        // fold however many limbs the value actually has.
        let limbs = needed.max(self.cfg.ring.reduce_limbs());
        let mask = if limb_bits >= 128 {
            u128::MAX
        } else {
            (1u128 << limb_bits) - 1
        };
        let mut acc = 0u64;
        for j in (0..limbs).rev() {
            let shift = j * limb_bits;
            let chunk = if shift >= 128 {
                0
            } else {
                (mag >> shift) & mask
            };
            acc = self
                .barrett
                .reduce(acc as u128 * self.limb_radix as u128 + chunk)?;
        }
        Ok(acc)
    }
}

/// Bit-slices a residue vector into per-(bit, row tile) binary inputs,
/// zero padded to the array height. Index layout: bit * row_tiles + tile.
pub(crate) fn row_sliced_bits(
    vals: &[u64],
    k: u32,
    height: usize,
    row_tiles: usize,
) -> Vec<Vec<u8>> {
    let mut slices = Vec::with_capacity(k as usize * row_tiles);
    for t in 0..k {
        for tr in 0..row_tiles {
            let mut v = vec![0u8; height];
            let start = tr * height;
            if start < vals.len() {
                let end = (start + height).min(vals.len());
                for (dst, &src) in v.iter_mut().zip(&vals[start..end]) {
                    *dst = ((src >> t) & 1) as u8;
                }
            }
            slices.push(v);
        }
    }
    slices
}

/// Streams input bits through a bit-mapped plan and returns the wide
/// column sums, truncated to the weight matrix width. Shared by the
/// convolution fabric and the transform twiddle fabrics; `pass_id`
/// decorrelates noise streams when one simulation runs several passes.
pub(crate) fn bit_mapped_wide(
    plan: &MappingPlan,
    arrays: &[CrossbarArray],
    slices: &[Vec<u8>],
    noise_seed: Option<u64>,
    pass_id: u64,
) -> Result<Vec<u128>> {
    let k = plan.k as usize;
    let cols = plan.xbar.cols;
    let row_tiles = plan.row_tiles;
    let width = plan.col_tiles * cols;
    let mut wide = vec![0u128; plan.weight_cols];
    let mut acc = vec![0u128; width];
    for (pi, pe) in plan.pes.iter().enumerate() {
        let weight_bit = pe.bit_index.expect("bit-mapping plan carries bit indices");
        acc.iter_mut().for_each(|v| *v = 0);
        for t in (0..k).rev() {
            for v in acc.iter_mut() {
                *v <<= 1;
            }
            for tile in &pe.tiles {
                let array = &arrays[tile.physical];
                if noise_seed.is_none() && array.is_all_zero() {
                    continue;
                }
                let input = &slices[t * row_tiles + tile.row_tile];
                let out = match noise_seed {
                    None => array.vmm_exact(input)?,
                    Some(base) => array.vmm_noisy(
                        input,
                        mix_seed(&[
                            base,
                            pass_id,
                            pi as u64,
                            t as u64,
                            tile.row_tile as u64,
                            tile.col_tile as u64,
                        ]),
                    )?,
                };
                let base_col = tile.col_tile * cols;
                for (v, &code) in acc[base_col..base_col + cols].iter_mut().zip(&out.quantized)
                {
                    *v += code as u128;
                }
            }
        }
        for (w, &a) in wide.iter_mut().zip(acc.iter()) {
            *w += a << weight_bit;
        }
    }
    Ok(wide)
}

/// Per-coefficient comparison of a fabric output against the exact
/// product, under the wrap-aware distance on Z_q.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub coeffs: usize,
    pub mismatched: usize,
    pub error_rate: f64,
    pub mean_distance: f64,
    pub max_distance: u64,
}

impl ErrorStats {
    pub fn compare(got: &Polynomial, want: &Polynomial, q: u64) -> Result<ErrorStats> {
        if got.len() != want.len() {
            return Err(Error::ShapeMismatch {
                context: "error statistics operands",
                expected: want.len(),
                got: got.len(),
            });
        }
        let mut mismatched = 0usize;
        let mut total = 0u128;
        let mut max_distance = 0u64;
        for (&g, &w) in got.coeffs().iter().zip(want.coeffs()) {
            let d = modular_distance(g, w, q);
            if d > 0 {
                mismatched += 1;
            }
            total += d as u128;
            max_distance = max_distance.max(d);
        }
        let coeffs = got.len();
        Ok(ErrorStats {
            coeffs,
            mismatched,
            error_rate: mismatched as f64 / coeffs as f64,
            mean_distance: total as f64 / coeffs as f64,
            max_distance,
        })
    }

    pub fn exact(&self) -> bool {
        self.mismatched == 0
    }
}

/// Mixes coordinate tuples into per-call noise seeds so that every logical
/// activation draws an independent, reproducible stream.
pub(crate) fn mix_seed(parts: &[u64]) -> u64 {
    let mut h = 0x243f_6a88_85a3_08d3u64;
    for &part in parts {
        h = splitmix64(h ^ part);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
