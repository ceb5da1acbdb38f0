//! `run`: one PMM through the fabric plus the cost report.

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use xbar_pmm::cost::{estimate, CostReport};
use xbar_pmm::fabric::{ErrorStats, Fabric};
use xbar_pmm::ring::{Polynomial, RingParams};

use crate::config::{ConfigArgs, FormatArg, RunConfig};
use crate::output::{to_json, OutputArgs};
use crate::CliError;

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Serialize)]
struct PlanCounts {
    pe_count: usize,
    logical_arrays: usize,
    physical_arrays: usize,
    time_multiplex: u64,
    shift_adders: u64,
}

#[derive(Serialize)]
struct RunReport {
    config: RunConfig,
    ring: RingParams,
    plan: PlanCounts,
    product: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_stats: Option<ErrorStats>,
    cost: CostReport,
}

pub fn exec(args: &RunArgs) -> Result<i32, CliError> {
    let cfg = RunConfig::resolve(&args.config)?;
    let fabric_cfg = cfg.fabric_config()?;
    let ring = fabric_cfg.ring;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let a = Polynomial::random(&ring, &mut rng);
    let b = Polynomial::random(&ring, &mut rng);
    let noise_seed: u64 = rng.gen();

    let fabric = Fabric::new(&a, fabric_cfg)?;
    let (product, error_stats) = if cfg.sigma > 0.0 {
        let (p, stats) = fabric.pmm_noisy_with_stats(&b, noise_seed)?;
        (p, Some(stats))
    } else {
        (fabric.pmm_exact(&b)?, None)
    };
    let trace = fabric.trace(cfg.batch)?;
    let costs = cfg.costs()?;
    let cost = estimate(fabric.plan(), &trace, &costs)?;

    let plan = fabric.plan();
    let counts = PlanCounts {
        pe_count: plan.pe_count(),
        logical_arrays: plan.logical_count(),
        physical_arrays: plan.physical_count(),
        time_multiplex: plan.time_multiplex,
        shift_adders: plan.shift_adder_count,
    };

    let content = match args.output.format {
        FormatArg::Table => render_table(&cfg, &ring, &counts, &product, &error_stats, &cost),
        FormatArg::Csv => render_csv(&cfg, &ring, &counts, &cost),
        FormatArg::Json => to_json(&RunReport {
            config: cfg,
            ring,
            plan: counts,
            product: product.into_coeffs(),
            error_stats,
            cost,
        })?,
    };
    args.output.write(&content)?;
    Ok(0)
}

fn render_table(
    cfg: &RunConfig,
    ring: &RingParams,
    counts: &PlanCounts,
    product: &Polynomial,
    error_stats: &Option<ErrorStats>,
    cost: &CostReport,
) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "run");
    let _ = writeln!(s, "config:");
    for line in cfg.echo_toml().lines() {
        let _ = writeln!(s, "  {line}");
    }
    let _ = writeln!(
        s,
        "ring: n={} q={} k={} phi={}",
        ring.n,
        ring.q,
        ring.k,
        ring.phi.as_str()
    );
    let _ = writeln!(
        s,
        "plan: {} pes, {} logical arrays, {} physical, time-multiplex x{}, {} shift-adders",
        counts.pe_count,
        counts.logical_arrays,
        counts.physical_arrays,
        counts.time_multiplex,
        counts.shift_adders
    );
    let coeffs = product.coeffs();
    let head: Vec<String> = coeffs.iter().take(8).map(|c| c.to_string()).collect();
    let ellipsis = if coeffs.len() > 8 { ", ..." } else { "" };
    let _ = writeln!(
        s,
        "product: [{}{}] ({} coefficients)",
        head.join(", "),
        ellipsis,
        coeffs.len()
    );
    if let Some(stats) = error_stats {
        let _ = writeln!(
            s,
            "error-stats: rate {:.4} ({}/{} coefficients), mean distance {:.2}, max {}",
            stats.error_rate, stats.mismatched, stats.coeffs, stats.mean_distance, stats.max_distance
        );
    }
    s.push_str(&cost.render_text());
    s
}

fn render_csv(cfg: &RunConfig, ring: &RingParams, counts: &PlanCounts, cost: &CostReport) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "# xbar-pmm run v1");
    let _ = writeln!(s, "# config: {}", cfg.echo_json());
    let _ = writeln!(
        s,
        "n,k,mode,arrays,cycles,area_mm2,latency_us,energy_nj,throughput_kops,tpa_kops_mm2"
    );
    let mode: xbar_pmm::mapping::MappingMode = cfg.mode.into();
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{},{},{},{}",
        ring.n,
        ring.k,
        mode.as_str(),
        counts.physical_arrays,
        cost.cycles,
        cost.area_mm2,
        cost.latency_us,
        cost.energy_nj,
        cost.throughput_kops,
        cost.throughput_per_area
    );
    s
}
