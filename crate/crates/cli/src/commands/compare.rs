//! `compare-mapping`: both mapping styles at one design point, with the
//! element-wise ratio table (bit mapping over conventional).

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use xbar_pmm::cost::{compare, estimate, ComparisonTable, CostReport};
use xbar_pmm::fabric::pipeline::{build_trace, event_counters, stage_cycles, StageTiming};
use xbar_pmm::mapping::{build_conv_matrix, plan_for_weights, MappingMode, PlanOptions};
use xbar_pmm::ring::Polynomial;

use crate::config::{ConfigArgs, FormatArg, RunConfig};
use crate::output::{to_json, OutputArgs};
use crate::CliError;

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Serialize)]
struct CompareReport {
    config: RunConfig,
    bit_mapping: CostReport,
    conventional: CostReport,
    ratios: ComparisonTable,
}

pub fn exec(args: &CompareArgs) -> Result<i32, CliError> {
    let cfg = RunConfig::resolve(&args.config)?;
    let ring = cfg.ring()?;
    let xbar = cfg.xbar();
    xbar.validate()?;
    let costs = cfg.costs()?;
    let timing = StageTiming::default();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let a = Polynomial::random(&ring, &mut rng);
    let m = build_conv_matrix(&a, &ring)?;

    let report_for = |mode: MappingMode| -> Result<CostReport, CliError> {
        let plan = plan_for_weights(
            &m,
            ring.k,
            &xbar,
            PlanOptions {
                mode,
                array_budget: cfg.arrays,
                dedup: true,
            },
        )?;
        let stage = stage_cycles(&plan, &timing, ring.n);
        let per_op = event_counters(&plan, ring.n, ring.reduce_limbs());
        let trace = build_trace(stage, per_op, cfg.batch)?;
        Ok(estimate(&plan, &trace, &costs)?)
    };
    let bit_mapping = report_for(MappingMode::BitMapping)?;
    let conventional = report_for(MappingMode::Conventional)?;
    let ratios = compare(&bit_mapping, &conventional);

    let content = match args.output.format {
        FormatArg::Table => render_table(&cfg, &ratios),
        FormatArg::Csv => render_csv(&cfg, &ratios),
        FormatArg::Json => to_json(&CompareReport {
            config: cfg,
            bit_mapping,
            conventional,
            ratios,
        })?,
    };
    args.output.write(&content)?;
    Ok(0)
}

fn render_table(cfg: &RunConfig, ratios: &ComparisonTable) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "compare-mapping: n={} q={} (ratio = bit-mapping / conventional)",
        cfg.degree,
        cfg.modulus.unwrap_or_default()
    );
    s.push_str(&ratios.render_text("bit_mapping", "conventional"));
    s
}

fn render_csv(cfg: &RunConfig, ratios: &ComparisonTable) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "# xbar-pmm compare-mapping v1");
    let _ = writeln!(s, "# config: {}", cfg.echo_json());
    let _ = writeln!(s, "field,bit_mapping,conventional,ratio");
    for e in &ratios.entries {
        let ratio = match e.ratio {
            Some(r) => r.to_string(),
            None => String::new(),
        };
        let _ = writeln!(s, "{},{},{},{}", e.field, e.a, e.b, ratio);
    }
    s
}
