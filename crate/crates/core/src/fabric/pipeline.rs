//! Cycle and event model of the three-stage pipeline
//! {PE_COMPUTE, TILE_ACCUMULATE, TILE_REDUCE}.
//!
//! Stage busy cycles are structural: they depend on the mapping plan, the
//! stage timing constants, and the ring, never on operand values. The
//! initiation interval is the largest stage busy time; a batch of m
//! operations takes fill + (m - 1) * interval cycles.
//!
//! Event counters follow logical activity: a physical array shared by
//! five logical tiles converts and consumes energy five times per input
//! bit. Deduplication therefore reduces area but never conversions or
//! energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{MappingMode, MappingPlan};

/// Per-stage latency constants, all in cycles, all at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageTiming {
    /// Cycles per ADC conversion slot. One input bit occupies every ADC
    /// for `cols_per_adc` slots, so a vector-matrix multiplication issue
    /// takes `vmm_issue_cycles * cols_per_adc` cycles.
    pub vmm_issue_cycles: u64,
    /// Cycles per adder-tree level.
    pub adder_tree_cycles_per_level: u64,
    /// Cycles for the per-PE accumulate-shift at the end of the bit loop.
    pub shifter_cycles: u64,
    /// Cycles per level when combining PE outputs in TILE_ACCUMULATE.
    pub accumulate_cycles_per_level: u64,
    /// TILE_REDUCE cycles per batch of `cols` coefficients.
    pub reduce_cycles_per_batch: u64,
}

impl Default for StageTiming {
    fn default() -> Self {
        StageTiming {
            vmm_issue_cycles: 1,
            adder_tree_cycles_per_level: 1,
            shifter_cycles: 1,
            accumulate_cycles_per_level: 1,
            reduce_cycles_per_batch: 4,
        }
    }
}

impl StageTiming {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.vmm_issue_cycles,
            self.adder_tree_cycles_per_level,
            self.shifter_cycles,
            self.accumulate_cycles_per_level,
            self.reduce_cycles_per_batch,
        ];
        if all.contains(&0) {
            return Err(Error::UnsupportedParameters(
                "all stage latencies must be at least one cycle".into(),
            ));
        }
        Ok(())
    }
}

/// Pipeline stage names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    PeCompute,
    TileAccumulate,
    TileReduce,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::PeCompute => "PE_COMPUTE",
            Stage::TileAccumulate => "TILE_ACCUMULATE",
            Stage::TileReduce => "TILE_REDUCE",
        }
    }
}

/// Busy cycles of each stage for one operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCycles {
    pub pe_compute: u64,
    pub tile_accumulate: u64,
    pub tile_reduce: u64,
}

impl StageCycles {
    /// Cycles for one operation traversing all stages.
    pub fn fill(&self) -> u64 {
        self.pe_compute + self.tile_accumulate + self.tile_reduce
    }

    /// Initiation interval: the slowest stage bounds issue rate.
    pub fn initiation_interval(&self) -> u64 {
        self.pe_compute
            .max(self.tile_accumulate)
            .max(self.tile_reduce)
    }

    pub fn of(&self, stage: Stage) -> u64 {
        match stage {
            Stage::PeCompute => self.pe_compute,
            Stage::TileAccumulate => self.tile_accumulate,
            Stage::TileReduce => self.tile_reduce,
        }
    }
}

/// Event counts for one operation (or a whole batch in a batch trace).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounters {
    /// Logical array activations: logical arrays x input bits.
    pub array_activations: u64,
    /// ADC conversions: one per column per logical array activation.
    pub adc_conversions: u64,
    /// Shift-add unit firings: shift_adder_count x input bits.
    pub shift_add_ops: u64,
    /// Per-element adds in the row-tile adder trees.
    pub adder_tree_ops: u64,
    /// Digital reduction steps (Barrett limb folds, or per-element
    /// modular operations on the transform path).
    pub reduction_ops: u64,
}

impl EventCounters {
    pub fn scaled(&self, m: u64) -> EventCounters {
        EventCounters {
            array_activations: self.array_activations * m,
            adc_conversions: self.adc_conversions * m,
            shift_add_ops: self.shift_add_ops * m,
            adder_tree_ops: self.adder_tree_ops * m,
            reduction_ops: self.reduction_ops * m,
        }
    }

    pub fn add(&mut self, other: &EventCounters) {
        self.array_activations += other.array_activations;
        self.adc_conversions += other.adc_conversions;
        self.shift_add_ops += other.shift_add_ops;
        self.adder_tree_ops += other.adder_tree_ops;
        self.reduction_ops += other.reduction_ops;
    }
}

/// One stage occupancy window of one operation, [start, end) in cycles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageInterval {
    pub op: usize,
    pub stage: Stage,
    pub start: u64,
    pub end: u64,
}

/// Full pipeline activity record for a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    /// Operations in the batch.
    pub batch: usize,
    pub stage_cycles: StageCycles,
    pub initiation_interval: u64,
    pub total_cycles: u64,
    pub intervals: Vec<StageInterval>,
    /// Event totals over the whole batch.
    pub counters: EventCounters,
}

impl PipelineTrace {
    /// Steady-state throughput in kilo-operations per second at the given
    /// clock.
    pub fn throughput_kops(&self, frequency_mhz: f64) -> f64 {
        1e3 * frequency_mhz / self.initiation_interval as f64
    }

    /// Latency of a single operation through the pipeline, microseconds.
    pub fn fill_latency_us(&self, frequency_mhz: f64) -> f64 {
        self.stage_cycles.fill() as f64 / frequency_mhz
    }

    /// Line-oriented export: one record per stage event plus a summary
    /// record.
    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        for iv in &self.intervals {
            let _ = writeln!(
                s,
                "event op={} stage={} start={} end={}",
                iv.op,
                iv.stage.as_str(),
                iv.start,
                iv.end
            );
        }
        let c = &self.counters;
        let _ = writeln!(
            s,
            "summary batch={} total_cycles={} initiation_interval={} \
             pe_compute={} tile_accumulate={} tile_reduce={} \
             array_activations={} adc_conversions={} shift_add_ops={} \
             adder_tree_ops={} reduction_ops={}",
            self.batch,
            self.total_cycles,
            self.initiation_interval,
            self.stage_cycles.pe_compute,
            self.stage_cycles.tile_accumulate,
            self.stage_cycles.tile_reduce,
            c.array_activations,
            c.adc_conversions,
            c.shift_add_ops,
            c.adder_tree_ops,
            c.reduction_ops
        );
        s
    }
}

fn ceil_log2(x: usize) -> u64 {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as u64
    }
}

/// Structural stage busy cycles for one operation under a plan.
///
/// PE_COMPUTE streams k input bits; each bit occupies the shared ADCs for
/// `cols_per_adc` conversion slots, repeated per time-multiplex pass.
/// Conventional mapping additionally serializes the per-array shift-add
/// combine of k columns behind every bit. The row-tile adder tree and the
/// final accumulate-shift drain once per operation.
pub fn stage_cycles(plan: &MappingPlan, timing: &StageTiming, out_coeffs: usize) -> StageCycles {
    let bits = plan.input_bits() as u64;
    let mut per_bit =
        timing.vmm_issue_cycles * plan.xbar.cols_per_adc as u64 * plan.time_multiplex;
    if plan.mode == MappingMode::Conventional {
        per_bit += ceil_log2(plan.k as usize) * timing.adder_tree_cycles_per_level;
    }
    let tree_levels = ceil_log2(plan.arrays_per_pe());
    let pe_compute =
        (bits * per_bit + tree_levels * timing.adder_tree_cycles_per_level + timing.shifter_cycles)
            .max(1);
    let accumulate_levels = ceil_log2(plan.pe_count());
    let tile_accumulate = (accumulate_levels * timing.accumulate_cycles_per_level).max(1);
    let batches = out_coeffs.div_ceil(plan.xbar.cols) as u64;
    let tile_reduce = (timing.reduce_cycles_per_batch * batches).max(1);
    StageCycles {
        pe_compute,
        tile_accumulate,
        tile_reduce,
    }
}

/// Structural event counts for one operation under a plan.
///
/// `reduction_ops` is the number of digital reduction steps the output
/// stage performs: out_coeffs x limb folds per coefficient.
pub fn event_counters(plan: &MappingPlan, out_coeffs: usize, limbs_per_coeff: u32) -> EventCounters {
    let bits = plan.input_bits() as u64;
    let logical = plan.logical_count() as u64;
    let cols = plan.xbar.cols as u64;
    let array_activations = logical * bits;
    let adder_tree_ops: u64 = plan
        .pes
        .iter()
        .map(|pe| {
            let row_tiles = plan.row_tiles as u64;
            let col_tiles = (pe.tiles.len() as u64) / row_tiles.max(1);
            bits * (row_tiles.saturating_sub(1)) * col_tiles * cols
        })
        .sum();
    EventCounters {
        array_activations,
        adc_conversions: array_activations * cols,
        shift_add_ops: plan.shift_adder_count * bits,
        adder_tree_ops,
        reduction_ops: out_coeffs as u64 * limbs_per_coeff as u64,
    }
}

/// Schedules a batch of m identical operations and returns the full trace.
pub fn build_trace(
    stage: StageCycles,
    per_op: EventCounters,
    m: usize,
) -> Result<PipelineTrace> {
    if m == 0 {
        return Err(Error::EmptyBatch);
    }
    let ii = stage.initiation_interval();
    let fill = stage.fill();
    let total_cycles = fill + (m as u64 - 1) * ii;
    let mut intervals = Vec::with_capacity(3 * m);
    for op in 0..m {
        let issue = op as u64 * ii;
        let mut t = issue;
        for s in [Stage::PeCompute, Stage::TileAccumulate, Stage::TileReduce] {
            let d = stage.of(s);
            intervals.push(StageInterval {
                op,
                stage: s,
                start: t,
                end: t + d,
            });
            t += d;
        }
    }
    Ok(PipelineTrace {
        batch: m,
        stage_cycles: stage,
        initiation_interval: ii,
        total_cycles,
        intervals,
        counters: per_op.scaled(m as u64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{plan_bit_mapping, plan_conventional};
    use crate::ring::{ModulusPoly, Polynomial, RingParams};
    use crate::xbar::CrossbarConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn full_plan() -> MappingPlan {
        let p = RingParams::new(256, 65535, ModulusPoly::XnPlus1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let a = Polynomial::random(&p, &mut rng);
        plan_bit_mapping(&a, &p, &CrossbarConfig::default(), None).unwrap()
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
    }

    #[test]
    fn full_size_interval_in_documented_band() {
        // n=256, k=16, default timing: 16 bits x 8 conversion slots plus
        // tree drain 3 and shift 1 = 132 cycles, inside [64, 256].
        let plan = full_plan();
        let stage = stage_cycles(&plan, &StageTiming::default(), 256);
        assert_eq!(stage.pe_compute, 132);
        assert_eq!(stage.tile_accumulate, 4);
        assert_eq!(stage.tile_reduce, 8);
        assert_eq!(stage.initiation_interval(), 132);
        assert!((64..=256).contains(&stage.initiation_interval()));
    }

    #[test]
    fn conventional_serializes_group_combines() {
        let p = RingParams::new(256, 65535, ModulusPoly::XnPlus1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let a = Polynomial::random(&p, &mut rng);
        let plan = plan_conventional(&a, &p, &CrossbarConfig::default(), None).unwrap();
        let stage = stage_cycles(&plan, &StageTiming::default(), 256);
        // (8 + 4) per bit, 16 bits, plus tree over 128 arrays (7 levels)
        // and the accumulate-shift.
        assert_eq!(stage.pe_compute, 16 * 12 + 7 + 1);
        let bm = stage_cycles(&full_plan(), &StageTiming::default(), 256);
        assert!(stage.pe_compute > bm.pe_compute);
    }

    #[test]
    fn time_multiplex_scales_vmm_cycles() {
        let p = RingParams::new(256, 65535, ModulusPoly::XnPlus1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let a = Polynomial::random(&p, &mut rng);
        let cfg = CrossbarConfig::default();
        let free = plan_bit_mapping(&a, &p, &cfg, None).unwrap();
        let phys = free.physical_count();
        let halved = plan_bit_mapping(&a, &p, &cfg, Some(phys.div_ceil(2))).unwrap();
        assert_eq!(halved.time_multiplex, 2);
        let t = StageTiming::default();
        let s1 = stage_cycles(&free, &t, 256);
        let s2 = stage_cycles(&halved, &t, 256);
        // Only the per-bit VMM term doubles, not the drain terms.
        let drain = 3 + 1;
        assert_eq!(s2.pe_compute - drain, 2 * (s1.pe_compute - drain));
    }

    #[test]
    fn counters_follow_logical_activity() {
        let plan = full_plan();
        let p = RingParams::new(256, 65535, ModulusPoly::XnPlus1).unwrap();
        let c = event_counters(&plan, 256, p.reduce_limbs());
        assert_eq!(c.array_activations, 128 * 16);
        assert_eq!(c.adc_conversions, 128 * 16 * 128);
        assert_eq!(c.shift_add_ops, 16 * 16);
        assert_eq!(c.adder_tree_ops, 16 * 16 * 4 * 128);
        assert_eq!(c.reduction_ops, 256 * 2);
    }

    #[test]
    fn batch_trace_schedule() {
        let stage = StageCycles {
            pe_compute: 10,
            tile_accumulate: 3,
            tile_reduce: 5,
        };
        let per_op = EventCounters {
            array_activations: 7,
            adc_conversions: 70,
            shift_add_ops: 4,
            adder_tree_ops: 12,
            reduction_ops: 6,
        };
        let trace = build_trace(stage, per_op, 4).unwrap();
        assert_eq!(trace.initiation_interval, 10);
        assert_eq!(trace.total_cycles, 18 + 3 * 10);
        assert!(trace.total_cycles >= trace.initiation_interval);
        assert_eq!(trace.counters.adc_conversions, 280);
        assert_eq!(trace.intervals.len(), 12);
        // Within a stage, consecutive ops never overlap.
        for s in [Stage::PeCompute, Stage::TileAccumulate, Stage::TileReduce] {
            let mut windows: Vec<(u64, u64)> = trace
                .intervals
                .iter()
                .filter(|iv| iv.stage == s)
                .map(|iv| (iv.start, iv.end))
                .collect();
            windows.sort_unstable();
            for pair in windows.windows(2) {
                assert!(pair[0].1 <= pair[1].0);
            }
        }
        assert!(build_trace(stage, per_op, 0).is_err());
    }

    #[test]
    fn long_batch_converges_to_interval_rate() {
        let plan = full_plan();
        let stage = stage_cycles(&plan, &StageTiming::default(), 256);
        let trace = build_trace(stage, EventCounters::default(), 1000).unwrap();
        let measured = trace.batch as f64 / trace.total_cycles as f64;
        let ideal = 1.0 / trace.initiation_interval as f64;
        assert!((measured - ideal).abs() / ideal < 0.01);
    }

    #[test]
    fn trace_text_has_events_and_summary() {
        let stage = StageCycles {
            pe_compute: 2,
            tile_accumulate: 1,
            tile_reduce: 1,
        };
        let trace = build_trace(stage, EventCounters::default(), 2).unwrap();
        let text = trace.render_text();
        assert!(text.contains("event op=0 stage=PE_COMPUTE start=0 end=2"));
        assert!(text.contains("event op=1 stage=TILE_REDUCE"));
        assert!(text.lines().last().unwrap().starts_with("summary batch=2"));
    }
}
