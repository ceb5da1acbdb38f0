//! `dump-plan`: the weight-to-array mapping for a design point, listing
//! processing elements, the logical-to-physical tile assignment, and
//! reuse factors.

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use xbar_pmm::mapping::{
    build_conv_matrix, plan_for_weights, DenseWeights, MappingMode, MappingPlan, PlanOptions,
};
use xbar_pmm::ring::Polynomial;
use xbar_pmm::xbar::CrossbarConfig;

use crate::config::{ConfigArgs, FormatArg, RunConfig};
use crate::output::{to_json, OutputArgs};
use crate::CliError;

/// 2-bit demo weights whose bit planes collapse onto two distinct
/// shift-adder groups on 2x2 arrays.
const TOY_WEIGHTS: [u64; 16] = [1, 2, 3, 0, 2, 1, 0, 3, 3, 0, 1, 2, 0, 3, 2, 1];
const TOY_BITS: u32 = 2;

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Map the built-in 4x4 2-bit demo weights on 2x2 arrays, both
    /// mapping styles.
    #[arg(long)]
    pub toy: bool,
    /// Map the zero polynomial instead of a random resident operand.
    #[arg(long)]
    pub zero: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Serialize)]
struct TileRef {
    row_tile: usize,
    col_tile: usize,
    physical: usize,
}

#[derive(Serialize)]
struct PeSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    bit_index: Option<u32>,
    tiles: Vec<TileRef>,
}

#[derive(Serialize)]
struct PlanSummary {
    mode: &'static str,
    weight_rows: usize,
    weight_cols: usize,
    k: u32,
    row_tiles: usize,
    col_tiles: usize,
    pe_count: usize,
    logical_arrays: usize,
    physical_arrays: usize,
    reuse_factor: f64,
    shift_adders: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    array_budget: Option<usize>,
    time_multiplex: u64,
    pes: Vec<PeSummary>,
    /// Logical references per physical array.
    reuse_counts: Vec<usize>,
}

impl PlanSummary {
    fn from_plan(plan: &MappingPlan) -> Self {
        PlanSummary {
            mode: plan.mode.as_str(),
            weight_rows: plan.weight_rows,
            weight_cols: plan.weight_cols,
            k: plan.k,
            row_tiles: plan.row_tiles,
            col_tiles: plan.col_tiles,
            pe_count: plan.pe_count(),
            logical_arrays: plan.logical_count(),
            physical_arrays: plan.physical_count(),
            reuse_factor: plan.logical_count() as f64 / plan.physical_count().max(1) as f64,
            shift_adders: plan.shift_adder_count,
            array_budget: plan.array_budget,
            time_multiplex: plan.time_multiplex,
            pes: plan
                .pes
                .iter()
                .map(|pe| PeSummary {
                    bit_index: pe.bit_index,
                    tiles: pe
                        .tiles
                        .iter()
                        .map(|t| TileRef {
                            row_tile: t.row_tile,
                            col_tile: t.col_tile,
                            physical: t.physical,
                        })
                        .collect(),
                })
                .collect(),
            reuse_counts: plan.reuse_counts(),
        }
    }
}

#[derive(Serialize)]
struct PlanReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<RunConfig>,
    toy: bool,
    zero: bool,
    plans: Vec<PlanSummary>,
}

pub fn exec(args: &PlanArgs) -> Result<i32, CliError> {
    let (config, plans) = if args.toy {
        (None, toy_plans()?)
    } else {
        let cfg = RunConfig::resolve(&args.config)?;
        let plans = vec![config_plan(&cfg, args.zero)?];
        (Some(cfg), plans)
    };

    let content = match args.output.format {
        FormatArg::Table => render_table(&plans),
        FormatArg::Csv => render_csv(&plans),
        FormatArg::Json => {
            let summaries = plans.iter().map(PlanSummary::from_plan).collect();
            to_json(&PlanReport {
                config,
                toy: args.toy,
                zero: args.zero,
                plans: summaries,
            })?
        }
    };
    args.output.write(&content)?;
    Ok(0)
}

fn toy_plans() -> Result<Vec<MappingPlan>, CliError> {
    let weights = DenseWeights::new(4, 4, TOY_WEIGHTS.to_vec())?;
    let xbar = CrossbarConfig {
        rows: 2,
        cols: 2,
        adc_bits: 8,
        cols_per_adc: 2,
        noise_sigma: 0.0,
        flip_prob: 0.0,
    };
    let mut plans = Vec::new();
    for mode in [MappingMode::BitMapping, MappingMode::Conventional] {
        plans.push(plan_for_weights(
            &weights,
            TOY_BITS,
            &xbar,
            PlanOptions {
                mode,
                array_budget: None,
                dedup: true,
            },
        )?);
    }
    Ok(plans)
}

fn config_plan(cfg: &RunConfig, zero: bool) -> Result<MappingPlan, CliError> {
    let ring = cfg.ring()?;
    let a = if zero {
        Polynomial::zero(&ring)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Polynomial::random(&ring, &mut rng)
    };
    let m = build_conv_matrix(&a, &ring)?;
    Ok(plan_for_weights(
        &m,
        ring.k,
        &cfg.xbar(),
        PlanOptions {
            mode: cfg.mode.into(),
            array_budget: cfg.arrays,
            dedup: true,
        },
    )?)
}

fn render_table(plans: &[MappingPlan]) -> String {
    let mut s = String::new();
    for (i, plan) in plans.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        s.push_str(&plan.render_text());
    }
    s
}

fn render_csv(plans: &[MappingPlan]) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "# xbar-pmm dump-plan v1");
    let _ = writeln!(s, "mode,pe,bit_index,row_tile,col_tile,physical");
    for plan in plans {
        for (i, pe) in plan.pes.iter().enumerate() {
            for t in &pe.tiles {
                let bit = match pe.bit_index {
                    Some(b) => b.to_string(),
                    None => String::new(),
                };
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    plan.mode.as_str(),
                    i,
                    bit,
                    t.row_tile,
                    t.col_tile,
                    t.physical
                );
            }
        }
    }
    s
}
