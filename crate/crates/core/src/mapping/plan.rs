//! Mapping plan construction: which tile goes on which physical array,
//! how many shift-adders the layout needs, and how much time-multiplexing
//! an array budget forces.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::{
    extract_conventional_tile, extract_plane_tile, grid_dims, BitPlane, TileBits, WeightSource,
};
use crate::error::{Error, Result};
use crate::ring::{Polynomial, RingParams};
use crate::xbar::CrossbarConfig;

/// Weight layout style.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingMode {
    /// One bit plane per processing element, one shift-adder per PE.
    BitMapping,
    /// All k bits of a weight in adjacent columns of one array, one
    /// shift-add unit per weight group per array.
    Conventional,
}

impl MappingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MappingMode::BitMapping => "bit-mapping",
            MappingMode::Conventional => "conventional",
        }
    }
}

/// Knobs for plan construction.
#[derive(Clone, Copy, Debug)]
pub struct PlanOptions {
    pub mode: MappingMode,
    /// Cap on physical arrays; exceeding it time-multiplexes.
    pub array_budget: Option<usize>,
    /// Content deduplication across tiles. On by default; the soundness
    /// tests disable it to compare against fully materialized arrays.
    pub dedup: bool,
}

impl PlanOptions {
    pub fn new(mode: MappingMode) -> Self {
        PlanOptions {
            mode,
            array_budget: None,
            dedup: true,
        }
    }
}

/// One logical tile position and the physical array backing it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalTile {
    pub row_tile: usize,
    pub col_tile: usize,
    pub physical: usize,
}

/// One processing element: its weight-bit assignment (bit mapping only)
/// and its logical tiles in row-major tile order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PePlan {
    /// Weight bit this PE holds; None in conventional mode.
    pub bit_index: Option<u32>,
    pub tiles: Vec<LogicalTile>,
}

/// Complete placement of a weight matrix onto crossbar arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct MappingPlan {
    pub mode: MappingMode,
    /// Weight (and input) bit width.
    pub k: u32,
    pub weight_rows: usize,
    pub weight_cols: usize,
    pub row_tiles: usize,
    pub col_tiles: usize,
    /// Weights per array in conventional mode (floor(C / k)); 0 for bit
    /// mapping where a column holds a single bit plane entry.
    pub weights_per_array: usize,
    pub pes: Vec<PePlan>,
    /// Distinct array contents, indexed by `LogicalTile::physical`.
    pub physical: Vec<TileBits>,
    pub shift_adder_count: u64,
    pub array_budget: Option<usize>,
    /// ceil(physical / budget); 1 when no budget applies.
    pub time_multiplex: u64,
    pub xbar: CrossbarConfig,
}

impl MappingPlan {
    pub fn logical_count(&self) -> usize {
        self.pes.iter().map(|pe| pe.tiles.len()).sum()
    }

    pub fn physical_count(&self) -> usize {
        self.physical.len()
    }

    pub fn pe_count(&self) -> usize {
        self.pes.len()
    }

    /// Largest number of logical arrays on any PE.
    pub fn arrays_per_pe(&self) -> usize {
        self.pes.iter().map(|pe| pe.tiles.len()).max().unwrap_or(0)
    }

    /// How many logical tiles each physical array serves.
    pub fn reuse_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.physical.len()];
        for pe in &self.pes {
            for t in &pe.tiles {
                counts[t.physical] += 1;
            }
        }
        counts
    }

    /// Number of input bits streamed per operation (same width as the
    /// weights).
    pub fn input_bits(&self) -> u32 {
        self.k
    }

    /// Plan summary plus the full logical-to-physical assignment, stable
    /// line-oriented text.
    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "mapping-plan");
        let _ = writeln!(s, "mode: {}", self.mode.as_str());
        let _ = writeln!(
            s,
            "weights: {} x {} entries, {}-bit",
            self.weight_rows, self.weight_cols, self.k
        );
        let _ = writeln!(
            s,
            "array: {} x {}, adc {}-bit, {} cols per adc",
            self.xbar.rows, self.xbar.cols, self.xbar.adc_bits, self.xbar.cols_per_adc
        );
        let _ = writeln!(
            s,
            "tiling: {} row-tiles x {} col-tiles",
            self.row_tiles, self.col_tiles
        );
        if self.mode == MappingMode::Conventional {
            let _ = writeln!(s, "weights-per-array: {}", self.weights_per_array);
        }
        let _ = writeln!(s, "pe-count: {}", self.pe_count());
        let _ = writeln!(s, "logical-arrays: {}", self.logical_count());
        let _ = writeln!(s, "physical-arrays: {}", self.physical_count());
        let _ = writeln!(
            s,
            "reuse-factor: {:.2}",
            self.logical_count() as f64 / self.physical_count().max(1) as f64
        );
        let _ = writeln!(s, "shift-adders: {}", self.shift_adder_count);
        match self.array_budget {
            Some(b) => {
                let _ =
                    writeln!(s, "array-budget: {b} (time-multiplex x{})", self.time_multiplex);
            }
            None => {
                let _ = writeln!(s, "array-budget: none (time-multiplex x1)");
            }
        }
        for (i, pe) in self.pes.iter().enumerate() {
            match pe.bit_index {
                Some(b) => {
                    let _ = writeln!(s, "pe {i}: weight-bit {b}, {} tiles", pe.tiles.len());
                }
                None => {
                    let _ = writeln!(s, "pe {i}: full-width, {} tiles", pe.tiles.len());
                }
            }
            for t in &pe.tiles {
                let _ = writeln!(
                    s,
                    "  tile r{} c{} -> phys {}",
                    t.row_tile, t.col_tile, t.physical
                );
            }
        }
        let reuse = self.reuse_counts();
        for (id, (tile, uses)) in self.physical.iter().zip(&reuse).enumerate() {
            let _ = writeln!(
                s,
                "phys {id}: {} logical use(s){}",
                uses,
                if tile.is_zero() { ", all-zero" } else { "" }
            );
        }
        s
    }
}

/// Plans the placement of an arbitrary weight matrix.
pub fn plan_for_weights<W: WeightSource>(
    w: &W,
    k: u32,
    cfg: &CrossbarConfig,
    opts: PlanOptions,
) -> Result<MappingPlan> {
    cfg.validate()?;
    if k == 0 || k > 64 {
        return Err(Error::UnsupportedParameters(format!(
            "bit width {k} must be in [1, 64]"
        )));
    }
    if w.entry_bits() > k {
        return Err(Error::RangeExceeded {
            value: w.entry_bits() as u128,
            bound: k as u128,
        });
    }
    if let Some(0) = opts.array_budget {
        return Err(Error::InvalidBudget(0));
    }

    let mut interner = TileInterner::new(opts.dedup);
    let (pes, row_tiles, col_tiles, weights_per_array) = match opts.mode {
        MappingMode::BitMapping => {
            let (row_tiles, col_tiles) = grid_dims(w.rows(), w.cols(), cfg);
            let pes = (0..k)
                .map(|bit_index| {
                    let plane = BitPlane {
                        source: w,
                        bit_index,
                    };
                    let mut tiles = Vec::with_capacity(row_tiles * col_tiles);
                    for tr in 0..row_tiles {
                        for tc in 0..col_tiles {
                            let content = extract_plane_tile(&plane, cfg, tr, tc);
                            tiles.push(LogicalTile {
                                row_tile: tr,
                                col_tile: tc,
                                physical: interner.intern(content),
                            });
                        }
                    }
                    PePlan {
                        bit_index: Some(bit_index),
                        tiles,
                    }
                })
                .collect::<Vec<_>>();
            (pes, row_tiles, col_tiles, 0)
        }
        MappingMode::Conventional => {
            let wpa = cfg.cols / k as usize;
            if wpa == 0 {
                return Err(Error::UnsupportedParameters(format!(
                    "conventional mapping needs cols >= k ({} < {k})",
                    cfg.cols
                )));
            }
            let row_tiles = w.rows().div_ceil(cfg.rows);
            let col_tiles = w.cols().div_ceil(wpa);
            let mut tiles = Vec::with_capacity(row_tiles * col_tiles);
            for tr in 0..row_tiles {
                for tc in 0..col_tiles {
                    let content = extract_conventional_tile(w, k, wpa, cfg, tr, tc);
                    tiles.push(LogicalTile {
                        row_tile: tr,
                        col_tile: tc,
                        physical: interner.intern(content),
                    });
                }
            }
            let pes = vec![PePlan {
                bit_index: None,
                tiles,
            }];
            (pes, row_tiles, col_tiles, wpa)
        }
    };

    let physical = interner.into_physical();
    let logical: usize = pes.iter().map(|pe| pe.tiles.len()).sum();
    let shift_adder_count = match opts.mode {
        MappingMode::BitMapping => k as u64,
        MappingMode::Conventional => logical as u64 * weights_per_array as u64,
    };
    let time_multiplex = match opts.array_budget {
        Some(b) => physical.len().div_ceil(b).max(1) as u64,
        None => 1,
    };
    Ok(MappingPlan {
        mode: opts.mode,
        k,
        weight_rows: w.rows(),
        weight_cols: w.cols(),
        row_tiles,
        col_tiles,
        weights_per_array,
        pes,
        physical,
        shift_adder_count,
        array_budget: opts.array_budget,
        time_multiplex,
        xbar: *cfg,
    })
}

/// Bit-mapping plan for the convolution matrix of `a`.
pub fn plan_bit_mapping(
    a: &Polynomial,
    p: &RingParams,
    cfg: &CrossbarConfig,
    array_budget: Option<usize>,
) -> Result<MappingPlan> {
    let m = super::build_conv_matrix(a, p)?;
    plan_for_weights(
        &m,
        p.k,
        cfg,
        PlanOptions {
            mode: MappingMode::BitMapping,
            array_budget,
            dedup: true,
        },
    )
}

/// Conventional plan for the convolution matrix of `a`.
pub fn plan_conventional(
    a: &Polynomial,
    p: &RingParams,
    cfg: &CrossbarConfig,
    array_budget: Option<usize>,
) -> Result<MappingPlan> {
    let m = super::build_conv_matrix(a, p)?;
    plan_for_weights(
        &m,
        p.k,
        cfg,
        PlanOptions {
            mode: MappingMode::Conventional,
            array_budget,
            dedup: true,
        },
    )
}

/// Assigns physical ids to tile contents, collapsing duplicates when
/// deduplication is on.
struct TileInterner {
    dedup: bool,
    physical: Vec<TileBits>,
    index: HashMap<TileBits, usize>,
}

impl TileInterner {
    fn new(dedup: bool) -> Self {
        TileInterner {
            dedup,
            physical: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, content: TileBits) -> usize {
        if !self.dedup {
            self.physical.push(content);
            return self.physical.len() - 1;
        }
        if let Some(&id) = self.index.get(&content) {
            return id;
        }
        let id = self.physical.len();
        self.physical.push(content.clone());
        self.index.insert(content, id);
        id
    }

    fn into_physical(self) -> Vec<TileBits> {
        self.physical
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::DenseWeights;
    use crate::ring::ModulusPoly;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_cfg() -> CrossbarConfig {
        CrossbarConfig {
            rows: 2,
            cols: 2,
            adc_bits: 4,
            cols_per_adc: 1,
            noise_sigma: 0.0,
            flip_prob: 0.0,
        }
    }

    fn toy_weights() -> DenseWeights {
        // 4x4 matrix of 2-bit weights.
        DenseWeights::new(
            4,
            4,
            vec![1, 2, 3, 0, 2, 1, 0, 3, 3, 0, 1, 2, 0, 3, 2, 1],
        )
        .unwrap()
    }

    #[test]
    fn toy_case_shift_adder_counts() {
        // 2-bit 4x4 weights on 2x2 arrays: 8 shift-adders conventional,
        // 2 with bit mapping.
        let w = toy_weights();
        let cfg = toy_cfg();
        let conv =
            plan_for_weights(&w, 2, &cfg, PlanOptions::new(MappingMode::Conventional)).unwrap();
        assert_eq!(conv.logical_count(), 8);
        assert_eq!(conv.shift_adder_count, 8);
        assert_eq!(conv.weights_per_array, 1);

        let bm = plan_for_weights(&w, 2, &cfg, PlanOptions::new(MappingMode::BitMapping)).unwrap();
        assert_eq!(bm.pe_count(), 2);
        assert_eq!(bm.shift_adder_count, 2);
        // 2 PEs x (2x2 tile grid) = 8 logical arrays before dedup.
        assert_eq!(bm.logical_count(), 8);
        assert_eq!(bm.arrays_per_pe(), 4);
    }

    #[test]
    fn bit_mapping_pe_count_equals_width() {
        let p = RingParams::new(16, 255, ModulusPoly::XnPlus1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let a = Polynomial::random(&p, &mut rng);
        let cfg = CrossbarConfig::default();
        let plan = plan_bit_mapping(&a, &p, &cfg, None).unwrap();
        assert_eq!(plan.pe_count(), p.k as usize);
        assert_eq!(plan.shift_adder_count, p.k as u64);
        for (b, pe) in plan.pes.iter().enumerate() {
            assert_eq!(pe.bit_index, Some(b as u32));
        }
    }

    #[test]
    fn conventional_dominates_bit_mapping_shift_adders() {
        let cfg = CrossbarConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for (n, q) in [(16usize, 255u64), (64, 7681), (256, 65535)] {
            let p = RingParams::new(n, q, ModulusPoly::XnPlus1).unwrap();
            let a = Polynomial::random(&p, &mut rng);
            let bm = plan_bit_mapping(&a, &p, &cfg, None).unwrap();
            let conv = plan_conventional(&a, &p, &cfg, None).unwrap();
            assert!(conv.shift_adder_count >= bm.shift_adder_count);
        }
    }

    #[test]
    fn full_size_plan_shape() {
        // n=256, k=16 on default arrays: per plane 2 row-tiles x 4
        // col-tiles, 16 planes, 128 logical arrays.
        let p = RingParams::new(256, 65535, ModulusPoly::XnPlus1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let a = Polynomial::random(&p, &mut rng);
        let cfg = CrossbarConfig::default();
        let plan = plan_bit_mapping(&a, &p, &cfg, None).unwrap();
        assert_eq!(plan.row_tiles, 2);
        assert_eq!(plan.col_tiles, 4);
        assert_eq!(plan.logical_count(), 128);
        assert!(plan.physical_count() < plan.logical_count());
        let conv = plan_conventional(&a, &p, &cfg, None).unwrap();
        assert_eq!(conv.weights_per_array, 8);
        assert_eq!(conv.col_tiles, 64);
        assert_eq!(conv.logical_count(), 128);
        assert_eq!(conv.shift_adder_count, 1024);
    }

    #[test]
    fn zero_generator_needs_one_physical_array() {
        let p = RingParams::new(64, 255, ModulusPoly::XnPlus1).unwrap();
        let a = Polynomial::zero(&p);
        let cfg = CrossbarConfig::default();
        let plan = plan_bit_mapping(&a, &p, &cfg, None).unwrap();
        assert_eq!(plan.physical_count(), 1);
        assert!(plan.physical[0].is_zero());
    }

    #[test]
    fn identical_planes_share_physical_arrays() {
        // All-ones coefficients: every bit plane of a 3 (binary 11)
        // generator is identical, so PEs share arrays.
        let p = RingParams::new(16, 3, ModulusPoly::XnPlus1).unwrap();
        let a = Polynomial::new(vec![3u64.min(p.q - 1); 16], &p).unwrap();
        let cfg = CrossbarConfig {
            rows: 8,
            cols: 8,
            adc_bits: 4,
            cols_per_adc: 4,
            noise_sigma: 0.0,
            flip_prob: 0.0,
        };
        // q = 3 means coefficients < 3; use 1 (binary 01)? Both planes of
        // value 1 differ. Use value 1 on plane 0 only: planes 0 and 1 of
        // a constant-1 generator are all-ones and all-zeros.
        let a1 = Polynomial::new(vec![1; 16], &p).unwrap();
        let _ = a;
        let plan = plan_bit_mapping(&a1, &p, &cfg, None).unwrap();
        // Plane 1 is entirely zero and collapses to one array; plane 0
        // tiles repeat along the diagonal.
        assert!(plan.physical_count() < plan.logical_count());
    }

    #[test]
    fn budget_drives_time_multiplex() {
        let p = RingParams::new(64, 255, ModulusPoly::XnPlus1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let a = Polynomial::random(&p, &mut rng);
        let cfg = CrossbarConfig::default();
        let free = plan_bit_mapping(&a, &p, &cfg, None).unwrap();
        assert_eq!(free.time_multiplex, 1);
        let phys = free.physical_count();
        let tight = plan_bit_mapping(&a, &p, &cfg, Some(phys.div_ceil(2))).unwrap();
        assert_eq!(tight.time_multiplex, 2);
        assert_eq!(tight.physical_count(), phys);
        assert!(matches!(
            plan_bit_mapping(&a, &p, &cfg, Some(0)),
            Err(Error::InvalidBudget(0))
        ));
    }

    #[test]
    fn dedup_off_materializes_every_tile() {
        let p = RingParams::new(32, 255, ModulusPoly::XnPlus1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let a = Polynomial::random(&p, &mut rng);
        let cfg = CrossbarConfig::default();
        let m = crate::mapping::build_conv_matrix(&a, &p).unwrap();
        let mut opts = PlanOptions::new(MappingMode::BitMapping);
        opts.dedup = false;
        let plan = plan_for_weights(&m, p.k, &cfg, opts).unwrap();
        assert_eq!(plan.physical_count(), plan.logical_count());
    }

    #[test]
    fn plan_render_mentions_key_facts() {
        let w = toy_weights();
        let cfg = toy_cfg();
        let bm = plan_for_weights(&w, 2, &cfg, PlanOptions::new(MappingMode::BitMapping)).unwrap();
        let text = bm.render_text();
        assert!(text.contains("mode: bit-mapping"));
        assert!(text.contains("shift-adders: 2"));
        assert!(text.contains("pe 0: weight-bit 0"));
        assert!(text.contains("-> phys"));
    }

    #[test]
    fn k1_plans_coincide_structurally() {
        // With 1-bit weights both modes place one plane and one unit per
        // array column group of size one.
        let w = DenseWeights::new(4, 4, vec![1, 0, 1, 1, 0, 1, 0, 1, 1, 1, 0, 0, 1, 0, 1, 0])
            .unwrap();
        let cfg = toy_cfg();
        let bm = plan_for_weights(&w, 1, &cfg, PlanOptions::new(MappingMode::BitMapping)).unwrap();
        let conv =
            plan_for_weights(&w, 1, &cfg, PlanOptions::new(MappingMode::Conventional)).unwrap();
        assert_eq!(bm.pe_count(), 1);
        assert_eq!(bm.logical_count(), conv.logical_count());
        assert_eq!(bm.row_tiles, conv.row_tiles);
        assert_eq!(bm.col_tiles, conv.col_tiles);
        // Same tile contents in both plans.
        assert_eq!(bm.physical, conv.physical);
    }
}
