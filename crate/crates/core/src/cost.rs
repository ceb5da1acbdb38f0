//! Area, energy, latency, and throughput estimation.
//!
//! Unit counts come from the mapping plan: area scales with physical
//! arrays, so deduplication shrinks it. Energy comes from the pipeline
//! trace's event counters, which follow logical activity, so
//! deduplication never reduces energy. Throughput is defined as
//! 10^3 * frequency_mhz / initiation_interval and reported through that
//! identity everywhere.

use std::collections::BTreeMap;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fabric::pipeline::{self, PipelineTrace, StageTiming};
use crate::mapping::{MappingMode, MappingPlan, PlanOptions};
use crate::par;
use crate::ring::{default_modulus, ModulusPoly, Polynomial, RingParams};
use crate::xbar::CrossbarConfig;

/// Area and per-event energy of one component type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitCost {
    pub area_um2: f64,
    pub energy_pj: f64,
}

/// Cost table for every modeled component plus the clock.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentCosts {
    pub xbar_array: UnitCost,
    pub adc: UnitCost,
    pub shift_adder: UnitCost,
    pub adder_tree_node: UnitCost,
    pub accumulator: UnitCost,
    pub reduction_unit: UnitCost,
    pub input_driver: UnitCost,
    pub frequency_mhz: f64,
}

const COMPONENT_KEYS: [&str; 7] = [
    "xbar_array",
    "adc",
    "shift_adder",
    "adder_tree_node",
    "accumulator",
    "reduction_unit",
    "input_driver",
];

impl ComponentCosts {
    /// Parses the line-oriented cost format: `key = value  # provenance`.
    /// Blank lines and full-line comments are skipped. Every entry must
    /// carry a trailing comment recording where its number came from.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut values: BTreeMap<String, f64> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (entry, comment) = trimmed.split_once('#').ok_or_else(|| Error::CostConfig {
                line,
                message: "entry needs a trailing # comment recording its provenance".into(),
            })?;
            if comment.trim().is_empty() {
                return Err(Error::CostConfig {
                    line,
                    message: "provenance comment must not be empty".into(),
                });
            }
            let (key, value) = entry.split_once('=').ok_or_else(|| Error::CostConfig {
                line,
                message: "expected key = value".into(),
            })?;
            let key = key.trim();
            if !known_key(key) {
                return Err(Error::CostConfig {
                    line,
                    message: format!("unknown key {key}"),
                });
            }
            let value: f64 = value.trim().parse().map_err(|_| Error::CostConfig {
                line,
                message: format!("value for {key} is not a number"),
            })?;
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::CostConfig {
                    line,
                    message: format!("value for {key} must be positive and finite"),
                });
            }
            if values.insert(key.to_string(), value).is_some() {
                return Err(Error::CostConfig {
                    line,
                    message: format!("duplicate key {key}"),
                });
            }
        }
        let mut take = |key: &str| -> Result<f64> {
            values.remove(key).ok_or_else(|| Error::MissingCost(key.into()))
        };
        let mut unit = |name: &str| -> Result<UnitCost> {
            Ok(UnitCost {
                area_um2: take(&format!("{name}.area_um2"))?,
                energy_pj: take(&format!("{name}.energy_pj"))?,
            })
        };
        Ok(ComponentCosts {
            xbar_array: unit("xbar_array")?,
            adc: unit("adc")?,
            shift_adder: unit("shift_adder")?,
            adder_tree_node: unit("adder_tree_node")?,
            accumulator: unit("accumulator")?,
            reduction_unit: unit("reduction_unit")?,
            input_driver: unit("input_driver")?,
            frequency_mhz: take("frequency_mhz")?,
        })
    }

    /// The built-in table, calibrated so the 256-coefficient 16-bit
    /// bit-mapping point lands near 0.26 mm^2, 300 nJ, and 3000 KOP/s at
    /// 400 MHz.
    pub fn default_calibrated() -> Self {
        Self::from_config_str(include_str!("../data/default_costs.txt"))
            .expect("embedded default cost table parses")
    }
}

impl Default for ComponentCosts {
    fn default() -> Self {
        Self::default_calibrated()
    }
}

fn known_key(key: &str) -> bool {
    if key == "frequency_mhz" {
        return true;
    }
    COMPONENT_KEYS.iter().any(|c| {
        key == format!("{c}.area_um2") || key == format!("{c}.energy_pj")
    })
}

/// Hardware unit counts implied by a mapping plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitCounts {
    /// Physical (deduplicated) arrays.
    pub xbar_arrays: u64,
    pub adc_units: u64,
    pub shift_adders: u64,
    /// Column-wide two-input adders combining row tiles, per PE and
    /// column tile.
    pub adder_tree_nodes: u64,
    /// Per-PE output accumulators plus the tile-accumulate combiner.
    pub accumulators: u64,
    pub reduction_units: u64,
    /// Row driver banks, one per physical array.
    pub input_drivers: u64,
}

pub fn unit_counts(plan: &MappingPlan) -> UnitCounts {
    let physical = plan.physical_count() as u64;
    let pe = plan.pe_count() as u64;
    UnitCounts {
        xbar_arrays: physical,
        adc_units: physical * plan.xbar.adcs_per_array() as u64,
        shift_adders: plan.shift_adder_count,
        adder_tree_nodes: pe * (plan.row_tiles as u64 - 1) * plan.col_tiles as u64,
        accumulators: pe + 1,
        reduction_units: 1,
        input_drivers: physical,
    }
}

/// One component's share of the energy total.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyShare {
    pub component: &'static str,
    pub events: u64,
    pub energy_pj: f64,
    pub fraction: f64,
}

/// One component's share of the area total.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AreaShare {
    pub component: &'static str,
    pub units: u64,
    pub area_um2: f64,
    pub fraction: f64,
}

/// Full cost estimate for a batch of operations on one plan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub units: UnitCounts,
    pub area_um2: f64,
    pub area_mm2: f64,
    pub batch: usize,
    pub cycles: u64,
    pub initiation_interval: u64,
    pub latency_us: f64,
    pub energy_pj: f64,
    pub energy_nj: f64,
    pub throughput_kops: f64,
    pub throughput_per_area: f64,
    pub energy_breakdown: Vec<EnergyShare>,
    pub area_breakdown: Vec<AreaShare>,
}

impl CostReport {
    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let u = &self.units;
        let _ = writeln!(s, "units: {} arrays, {} adcs, {} shift-adders, {} tree-adders, {} accumulators, {} reduction, {} drivers",
            u.xbar_arrays, u.adc_units, u.shift_adders, u.adder_tree_nodes, u.accumulators, u.reduction_units, u.input_drivers);
        let _ = writeln!(s, "area: {:.4} mm2", self.area_mm2);
        for share in &self.area_breakdown {
            let _ = writeln!(
                s,
                "  {}: {:.4} mm2 ({:.1}%) over {} units",
                share.component,
                share.area_um2 / 1e6,
                100.0 * share.fraction,
                share.units
            );
        }
        let _ = writeln!(
            s,
            "timing: interval {} cycles, batch {} in {} cycles, latency {:.3} us",
            self.initiation_interval, self.batch, self.cycles, self.latency_us
        );
        let _ = writeln!(
            s,
            "throughput: {:.1} kops ({:.1} kops per mm2)",
            self.throughput_kops, self.throughput_per_area
        );
        let _ = writeln!(s, "energy: {:.2} nj per batch", self.energy_nj);
        for share in &self.energy_breakdown {
            let _ = writeln!(
                s,
                "  {}: {:.2} nj ({:.1}%) over {} events",
                share.component,
                share.energy_pj / 1e3,
                100.0 * share.fraction,
                share.events
            );
        }
        s
    }

    /// Component with the largest energy share.
    pub fn dominant_energy_component(&self) -> Option<&EnergyShare> {
        self.energy_breakdown
            .iter()
            .max_by(|a, b| a.energy_pj.total_cmp(&b.energy_pj))
    }

    /// Component with the largest area share.
    pub fn dominant_area_component(&self) -> Option<&AreaShare> {
        self.area_breakdown
            .iter()
            .max_by(|a, b| a.area_um2.total_cmp(&b.area_um2))
    }
}

/// Estimates cost for the batch described by `trace` on `plan`.
///
/// Accumulator events are one per PE per input bit plus the final combine
/// per PE; driver events equal array activations. Everything else comes
/// straight off the trace counters.
pub fn estimate(
    plan: &MappingPlan,
    trace: &PipelineTrace,
    costs: &ComponentCosts,
) -> Result<CostReport> {
    if costs.frequency_mhz <= 0.0 || !costs.frequency_mhz.is_finite() {
        return Err(Error::UnsupportedParameters(format!(
            "frequency_mhz must be positive, got {}",
            costs.frequency_mhz
        )));
    }
    let units = unit_counts(plan);
    let area_shares = [
        ("xbar_array", units.xbar_arrays, costs.xbar_array.area_um2),
        ("adc", units.adc_units, costs.adc.area_um2),
        ("shift_adder", units.shift_adders, costs.shift_adder.area_um2),
        (
            "adder_tree_node",
            units.adder_tree_nodes,
            costs.adder_tree_node.area_um2,
        ),
        ("accumulator", units.accumulators, costs.accumulator.area_um2),
        (
            "reduction_unit",
            units.reduction_units,
            costs.reduction_unit.area_um2,
        ),
        ("input_driver", units.input_drivers, costs.input_driver.area_um2),
    ];
    let area_um2: f64 = area_shares.iter().map(|(_, u, a)| *u as f64 * a).sum();
    let area_breakdown = area_shares
        .iter()
        .map(|&(component, count, per_unit)| {
            let a = count as f64 * per_unit;
            AreaShare {
                component,
                units: count,
                area_um2: a,
                fraction: if area_um2 > 0.0 { a / area_um2 } else { 0.0 },
            }
        })
        .collect();

    let c = &trace.counters;
    let bits = plan.input_bits() as u64;
    let pe = plan.pe_count() as u64;
    let accumulator_events = trace.batch as u64 * (bits * pe + pe);
    let driver_events = c.array_activations;
    let shares = [
        ("xbar_array", c.array_activations, costs.xbar_array.energy_pj),
        ("adc", c.adc_conversions, costs.adc.energy_pj),
        ("shift_adder", c.shift_add_ops, costs.shift_adder.energy_pj),
        (
            "adder_tree_node",
            c.adder_tree_ops,
            costs.adder_tree_node.energy_pj,
        ),
        ("accumulator", accumulator_events, costs.accumulator.energy_pj),
        ("reduction_unit", c.reduction_ops, costs.reduction_unit.energy_pj),
        ("input_driver", driver_events, costs.input_driver.energy_pj),
    ];
    let energy_pj: f64 = shares.iter().map(|(_, ev, e)| *ev as f64 * e).sum();
    let energy_breakdown = shares
        .iter()
        .map(|&(component, events, per_event)| {
            let e = events as f64 * per_event;
            EnergyShare {
                component,
                events,
                energy_pj: e,
                fraction: if energy_pj > 0.0 { e / energy_pj } else { 0.0 },
            }
        })
        .collect();

    let area_mm2 = area_um2 / 1e6;
    let throughput_kops = 1e3 * costs.frequency_mhz / trace.initiation_interval as f64;
    Ok(CostReport {
        units,
        area_um2,
        area_mm2,
        batch: trace.batch,
        cycles: trace.total_cycles,
        initiation_interval: trace.initiation_interval,
        latency_us: trace.total_cycles as f64 / costs.frequency_mhz,
        energy_pj,
        energy_nj: energy_pj / 1e3,
        throughput_kops,
        throughput_per_area: if area_mm2 > 0.0 {
            throughput_kops / area_mm2
        } else {
            0.0
        },
        energy_breakdown,
        area_breakdown,
    })
}

/// One row of a mapping comparison; `ratio` is `a / b`, `None` when the
/// denominator is zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioEntry {
    pub field: String,
    pub a: f64,
    pub b: f64,
    pub ratio: Option<f64>,
}

/// Element-wise ratios between two reports. Meaningful only when both
/// reports describe the same ring parameters and batch size; the caller
/// pairs them (typically bit mapping over conventional).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub entries: Vec<RatioEntry>,
}

impl ComparisonTable {
    pub fn entry(&self, field: &str) -> Option<&RatioEntry> {
        self.entries.iter().find(|e| e.field == field)
    }

    pub fn ratio(&self, field: &str) -> Option<f64> {
        self.entry(field).and_then(|e| e.ratio)
    }

    pub fn render_text(&self, label_a: &str, label_b: &str) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<24} {:>14} {:>14} {:>10}",
            "field", label_a, label_b, "ratio"
        );
        for e in &self.entries {
            let ratio = match e.ratio {
                Some(r) => format!("{r:.4}"),
                None => "n/a".to_string(),
            };
            let _ = writeln!(
                s,
                "{:<24} {:>14.4} {:>14.4} {:>10}",
                e.field, e.a, e.b, ratio
            );
        }
        s
    }
}

/// Ratio table `a / b` over every scalar field of the two reports,
/// including the per-component area and energy rows.
pub fn compare(a: &CostReport, b: &CostReport) -> ComparisonTable {
    fn push(entries: &mut Vec<RatioEntry>, field: String, a: f64, b: f64) {
        let ratio = if b == 0.0 { None } else { Some(a / b) };
        entries.push(RatioEntry { field, a, b, ratio });
    }
    let mut entries = Vec::new();
    let unit_rows = [
        ("units.xbar_arrays", a.units.xbar_arrays, b.units.xbar_arrays),
        ("units.adc_units", a.units.adc_units, b.units.adc_units),
        ("units.shift_adders", a.units.shift_adders, b.units.shift_adders),
        (
            "units.adder_tree_nodes",
            a.units.adder_tree_nodes,
            b.units.adder_tree_nodes,
        ),
        ("units.accumulators", a.units.accumulators, b.units.accumulators),
        (
            "units.reduction_units",
            a.units.reduction_units,
            b.units.reduction_units,
        ),
        ("units.input_drivers", a.units.input_drivers, b.units.input_drivers),
    ];
    for (field, ua, ub) in unit_rows {
        push(&mut entries, field.to_string(), ua as f64, ub as f64);
    }
    push(&mut entries, "area_mm2".to_string(), a.area_mm2, b.area_mm2);
    for (sa, sb) in a.area_breakdown.iter().zip(&b.area_breakdown) {
        debug_assert_eq!(sa.component, sb.component);
        push(
            &mut entries,
            format!("area.{}", sa.component),
            sa.area_um2,
            sb.area_um2,
        );
    }
    push(&mut entries, "cycles".to_string(), a.cycles as f64, b.cycles as f64);
    push(
        &mut entries,
        "initiation_interval".to_string(),
        a.initiation_interval as f64,
        b.initiation_interval as f64,
    );
    push(&mut entries, "latency_us".to_string(), a.latency_us, b.latency_us);
    push(&mut entries, "energy_nj".to_string(), a.energy_nj, b.energy_nj);
    for (sa, sb) in a.energy_breakdown.iter().zip(&b.energy_breakdown) {
        debug_assert_eq!(sa.component, sb.component);
        push(
            &mut entries,
            format!("energy.{}", sa.component),
            sa.energy_pj,
            sb.energy_pj,
        );
    }
    push(
        &mut entries,
        "throughput_kops".to_string(),
        a.throughput_kops,
        b.throughput_kops,
    );
    push(
        &mut entries,
        "throughput_per_area".to_string(),
        a.throughput_per_area,
        b.throughput_per_area,
    );
    ComparisonTable { entries }
}

/// Grid description for a structural sweep. No functional simulation
/// runs, so any bit width up to 64 is admissible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub degrees: Vec<usize>,
    pub bitwidths: Vec<u32>,
    pub modes: Vec<MappingMode>,
    pub phi: ModulusPoly,
    pub array_budget: Option<usize>,
    /// Seed for the per-point random resident operand.
    pub seed: u64,
}

/// One evaluated sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub k: u32,
    pub mode: MappingMode,
    pub physical_arrays: usize,
    pub logical_arrays: usize,
    pub time_multiplex: u64,
    pub cycles: u64,
    pub initiation_interval: u64,
    pub area_mm2: f64,
    pub latency_us: f64,
    pub energy_nj: f64,
    pub throughput_kops: f64,
    pub throughput_per_area: f64,
}

/// Evaluates the sweep grid structurally: plan, trace, estimate. Points
/// run in parallel; output order is the deterministic grid order
/// (degrees outermost, then bitwidths, then modes), and each point's
/// resident operand derives from the grid seed alone.
pub fn sweep(
    grid: &SweepGrid,
    xbar: &CrossbarConfig,
    timing: &StageTiming,
    costs: &ComponentCosts,
) -> Result<Vec<SweepPoint>> {
    xbar.validate()?;
    timing.validate()?;
    let mut cases = Vec::new();
    for &n in &grid.degrees {
        for &k in &grid.bitwidths {
            for &mode in &grid.modes {
                cases.push((n, k, mode));
            }
        }
    }
    let results = par::map_indexed(cases.len(), |i| {
        let (n, k, mode) = cases[i];
        sweep_point(n, k, mode, grid, xbar, timing, costs)
    });
    results.into_iter().collect()
}

fn sweep_point(
    n: usize,
    k: u32,
    mode: MappingMode,
    grid: &SweepGrid,
    xbar: &CrossbarConfig,
    timing: &StageTiming,
    costs: &ComponentCosts,
) -> Result<SweepPoint> {
    let ring = RingParams::new(n, default_modulus(k), grid.phi)?;
    // Both modes of one (n, k) point share a resident operand.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(crate::fabric::mix_seed(&[
        grid.seed, n as u64, k as u64,
    ]));
    let a = Polynomial::random(&ring, &mut rng);
    let m = crate::mapping::build_conv_matrix(&a, &ring)?;
    let plan = crate::mapping::plan_for_weights(
        &m,
        k,
        xbar,
        PlanOptions {
            mode,
            array_budget: grid.array_budget,
            dedup: true,
        },
    )?;
    let stage = pipeline::stage_cycles(&plan, timing, n);
    let per_op = pipeline::event_counters(&plan, n, ring.reduce_limbs());
    let trace = pipeline::build_trace(stage, per_op, 1)?;
    let report = estimate(&plan, &trace, costs)?;
    Ok(SweepPoint {
        n,
        k,
        mode,
        physical_arrays: plan.physical_count(),
        logical_arrays: plan.logical_count(),
        time_multiplex: plan.time_multiplex,
        cycles: report.cycles,
        initiation_interval: report.initiation_interval,
        area_mm2: report.area_mm2,
        latency_us: report.latency_us,
        energy_nj: report.energy_nj,
        throughput_kops: report.throughput_kops,
        throughput_per_area: report.throughput_per_area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::DEFAULT_FREQUENCY_MHZ;
    use rand_chacha::ChaCha8Rng;

    fn reference_plan(mode: MappingMode) -> MappingPlan {
        let p = RingParams::new(256, 65535, ModulusPoly::XnPlus1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let a = Polynomial::random(&p, &mut rng);
        let m = crate::mapping::build_conv_matrix(&a, &p).unwrap();
        crate::mapping::plan_for_weights(
            &m,
            p.k,
            &CrossbarConfig::default(),
            PlanOptions {
                mode,
                array_budget: None,
                dedup: true,
            },
        )
        .unwrap()
    }

    fn reference_report(mode: MappingMode) -> CostReport {
        let p = RingParams::new(256, 65535, ModulusPoly::XnPlus1).unwrap();
        let plan = reference_plan(mode);
        let stage = pipeline::stage_cycles(&plan, &StageTiming::default(), p.n);
        let per_op = pipeline::event_counters(&plan, p.n, p.reduce_limbs());
        let trace = pipeline::build_trace(stage, per_op, 1).unwrap();
        estimate(&plan, &trace, &ComponentCosts::default_calibrated()).unwrap()
    }

    #[test]
    fn parser_round_trip_of_default_table() {
        let costs = ComponentCosts::default_calibrated();
        assert_eq!(costs.frequency_mhz, DEFAULT_FREQUENCY_MHZ);
        assert_eq!(costs.adc.energy_pj, 1.0);
        assert_eq!(costs.xbar_array.area_um2, 900.0);
    }

    #[test]
    fn parser_rejects_malformed_entries() {
        let missing_comment = "adc.area_um2 = 250.0\n";
        assert!(matches!(
            ComponentCosts::from_config_str(missing_comment),
            Err(Error::CostConfig { line: 1, .. })
        ));
        let unknown = "dac.area_um2 = 1.0 # note\n";
        assert!(matches!(
            ComponentCosts::from_config_str(unknown),
            Err(Error::CostConfig { line: 1, .. })
        ));
        let bad_value = "adc.area_um2 = wide # note\n";
        assert!(ComponentCosts::from_config_str(bad_value).is_err());
        let negative = "adc.area_um2 = -3.0 # note\n";
        assert!(ComponentCosts::from_config_str(negative).is_err());
        let duplicate = "adc.area_um2 = 1.0 # a\nadc.area_um2 = 2.0 # b\n";
        assert!(ComponentCosts::from_config_str(duplicate).is_err());
        assert!(matches!(
            ComponentCosts::from_config_str("# only comments\n"),
            Err(Error::MissingCost(_))
        ));
    }

    #[test]
    fn unit_counts_reference_point() {
        let bm = unit_counts(&reference_plan(MappingMode::BitMapping));
        assert_eq!(bm.xbar_arrays, 49);
        assert_eq!(bm.adc_units, 49 * 16);
        assert_eq!(bm.shift_adders, 16);
        // 16 pes with one inter-row link across 4 column tiles each.
        assert_eq!(bm.adder_tree_nodes, 64);
        assert_eq!(bm.accumulators, 17);
        assert_eq!(bm.input_drivers, 49);

        let conv = unit_counts(&reference_plan(MappingMode::Conventional));
        assert_eq!(conv.shift_adders, 1024);
        assert_eq!(conv.accumulators, 2);
    }

    #[test]
    fn calibrated_reference_point_area_energy_throughput() {
        let r = reference_report(MappingMode::BitMapping);
        // Calibration targets: ~0.26 mm2, ~300 nJ, ~3000 kops.
        assert!((r.area_mm2 - 0.2566).abs() < 0.01, "area {}", r.area_mm2);
        assert!((r.energy_nj - 302.0).abs() < 10.0, "energy {}", r.energy_nj);
        assert_eq!(r.initiation_interval, 132);
        assert!((r.throughput_kops - 3030.3).abs() < 1.0);
        assert_eq!(r.dominant_energy_component().unwrap().component, "adc");
        assert!(r.dominant_energy_component().unwrap().fraction > 0.5);
        assert_eq!(r.dominant_area_component().unwrap().component, "adc");
        assert!(r.dominant_area_component().unwrap().fraction > 0.5);
    }

    #[test]
    fn area_fractions_and_sum_match_total() {
        let r = reference_report(MappingMode::BitMapping);
        let total: f64 = r.area_breakdown.iter().map(|s| s.area_um2).sum();
        assert!((total - r.area_um2).abs() < 1e-6 * r.area_um2);
        let fracs: f64 = r.area_breakdown.iter().map(|s| s.fraction).sum();
        assert!((fracs - 1.0).abs() < 1e-6);
    }

    #[test]
    fn compare_identical_reports_is_all_ones() {
        let r = reference_report(MappingMode::BitMapping);
        let table = compare(&r, &r);
        assert!(!table.entries.is_empty());
        for e in &table.entries {
            if e.b == 0.0 {
                assert!(e.ratio.is_none());
            } else {
                assert!((e.ratio.unwrap() - 1.0).abs() < 1e-12, "{}", e.field);
            }
        }
    }

    #[test]
    fn compare_reference_point_mapping_modes() {
        let bm = reference_report(MappingMode::BitMapping);
        let conv = reference_report(MappingMode::Conventional);
        let table = compare(&bm, &conv);
        assert!(table.ratio("area.shift_adder").unwrap() <= 0.20);
        assert!(table.ratio("units.shift_adders").unwrap() <= 0.20);
        assert!(table.ratio("throughput_per_area").unwrap() >= 3.0);
    }

    #[test]
    fn compare_flags_zero_denominator() {
        let a = reference_report(MappingMode::BitMapping);
        let mut b = reference_report(MappingMode::BitMapping);
        b.units.shift_adders = 0;
        let table = compare(&a, &b);
        assert!(table.entry("units.shift_adders").unwrap().ratio.is_none());
        let text = table.render_text("bit_mapping", "conventional");
        assert!(text.contains("n/a"));
    }

    #[test]
    fn throughput_identity_holds() {
        for mode in [MappingMode::BitMapping, MappingMode::Conventional] {
            let r = reference_report(mode);
            let expect = 1e3 * DEFAULT_FREQUENCY_MHZ / r.initiation_interval as f64;
            assert!((r.throughput_kops - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn bit_mapping_beats_conventional_on_density() {
        let bm = reference_report(MappingMode::BitMapping);
        let conv = reference_report(MappingMode::Conventional);
        assert!(bm.area_mm2 < conv.area_mm2);
        assert!(bm.throughput_per_area / conv.throughput_per_area >= 3.0);
    }

    #[test]
    fn energy_fractions_sum_to_one() {
        let r = reference_report(MappingMode::BitMapping);
        let total: f64 = r.energy_breakdown.iter().map(|s| s.fraction).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dedup_lowers_area_not_energy() {
        // Needs a multi-tile grid so the band structure actually repeats.
        let p = RingParams::new(256, 255, ModulusPoly::XnPlus1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let a = Polynomial::random(&p, &mut rng);
        let m = crate::mapping::build_conv_matrix(&a, &p).unwrap();
        let costs = ComponentCosts::default_calibrated();
        let mut reports = Vec::new();
        for dedup in [true, false] {
            let plan = crate::mapping::plan_for_weights(
                &m,
                p.k,
                &CrossbarConfig::default(),
                PlanOptions {
                    mode: MappingMode::BitMapping,
                    array_budget: None,
                    dedup,
                },
            )
            .unwrap();
            let stage = pipeline::stage_cycles(&plan, &StageTiming::default(), p.n);
            let per_op = pipeline::event_counters(&plan, p.n, p.reduce_limbs());
            let trace = pipeline::build_trace(stage, per_op, 1).unwrap();
            reports.push(estimate(&plan, &trace, &costs).unwrap());
        }
        let (with_dedup, without) = (&reports[0], &reports[1]);
        assert!(with_dedup.area_mm2 < without.area_mm2);
        assert_eq!(with_dedup.energy_pj, without.energy_pj);
        assert_eq!(with_dedup.initiation_interval, without.initiation_interval);
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let grid = SweepGrid {
            degrees: vec![64, 128],
            bitwidths: vec![8, 16],
            modes: vec![MappingMode::BitMapping, MappingMode::Conventional],
            phi: ModulusPoly::XnPlus1,
            array_budget: Some(64),
            seed: 7,
        };
        let xbar = CrossbarConfig::default();
        let timing = StageTiming::default();
        let costs = ComponentCosts::default_calibrated();
        let a = sweep(&grid, &xbar, &timing, &costs).unwrap();
        let b = sweep(&grid, &xbar, &timing, &costs).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
        let mut expect = Vec::new();
        for n in [64usize, 128] {
            for k in [8u32, 16] {
                for mode in [MappingMode::BitMapping, MappingMode::Conventional] {
                    expect.push((n, k, mode));
                }
            }
        }
        let got: Vec<_> = a.iter().map(|pt| (pt.n, pt.k, pt.mode)).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn sweep_covers_full_bitwidth_range_structurally() {
        // k = 64 exceeds the functional accumulators but sweeps fine.
        let grid = SweepGrid {
            degrees: vec![512],
            bitwidths: vec![64],
            modes: vec![MappingMode::BitMapping],
            phi: ModulusPoly::XnPlus1,
            array_budget: Some(128),
            seed: 7,
        };
        let pts = sweep(
            &grid,
            &CrossbarConfig::default(),
            &StageTiming::default(),
            &ComponentCosts::default_calibrated(),
        )
        .unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].throughput_kops > 0.0);
        assert!(pts[0].time_multiplex >= 1);
    }

    #[test]
    fn budget_doubling_never_reduces_throughput() {
        let xbar = CrossbarConfig::default();
        let timing = StageTiming::default();
        let costs = ComponentCosts::default_calibrated();
        for budget in [16usize, 32, 64] {
            let mut grids = Vec::new();
            for b in [budget, 2 * budget] {
                grids.push(
                    sweep(
                        &SweepGrid {
                            degrees: vec![256, 512],
                            bitwidths: vec![16],
                            modes: vec![MappingMode::BitMapping],
                            phi: ModulusPoly::XnPlus1,
                            array_budget: Some(b),
                            seed: 11,
                        },
                        &xbar,
                        &timing,
                        &costs,
                    )
                    .unwrap(),
                );
            }
            for (tight, loose) in grids[0].iter().zip(&grids[1]) {
                assert!(loose.throughput_kops >= tight.throughput_kops);
            }
        }
    }

    #[test]
    fn report_text_mentions_key_lines() {
        let r = reference_report(MappingMode::BitMapping);
        let text = r.render_text();
        assert!(text.contains("area: 0.2566 mm2"));
        assert!(text.contains("interval 132 cycles"));
        assert!(text.contains("adc:"));
    }
}
