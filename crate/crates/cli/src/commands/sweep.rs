//! `sweep`: structural cost evaluation over a degree x bitwidth x mode
//! grid. No functional simulation runs, so the grid admits the full
//! bit-width range.

use clap::Args;
use serde::Serialize;
use xbar_pmm::cost::{sweep, SweepGrid, SweepPoint};
use xbar_pmm::fabric::pipeline::StageTiming;

use crate::config::{ConfigArgs, FormatArg, ModeArg, RunConfig};
use crate::output::{to_json, OutputArgs};
use crate::CliError;

pub const CSV_HEADER: &str =
    "n,k,mode,arrays,cycles,area_mm2,latency_us,energy_nj,throughput_kops,tpa_kops_mm2";

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Degrees in the grid.
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024,2048")]
    pub degrees: Vec<usize>,
    /// Bit widths in the grid.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    pub bitwidths: Vec<u32>,
    /// Mapping styles to evaluate.
    #[arg(long, value_delimiter = ',', value_enum, default_value = "bit-mapping,conventional")]
    pub modes: Vec<ModeArg>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Serialize)]
struct SweepReport {
    config: RunConfig,
    degrees: Vec<usize>,
    bitwidths: Vec<u32>,
    modes: Vec<ModeArg>,
    points: Vec<SweepPoint>,
}

pub fn exec(args: &SweepArgs) -> Result<i32, CliError> {
    let cfg = RunConfig::resolve(&args.config)?;
    let grid = SweepGrid {
        degrees: args.degrees.clone(),
        bitwidths: args.bitwidths.clone(),
        modes: args.modes.iter().map(|&m| m.into()).collect(),
        phi: cfg.phi.into(),
        array_budget: cfg.arrays,
        seed: cfg.seed,
    };
    let costs = cfg.costs()?;
    let points = sweep(&grid, &cfg.xbar(), &StageTiming::default(), &costs)?;

    let content = match args.output.format {
        FormatArg::Table => render_table(&points),
        FormatArg::Csv => render_csv(&cfg, &points),
        FormatArg::Json => to_json(&SweepReport {
            config: cfg,
            degrees: args.degrees.clone(),
            bitwidths: args.bitwidths.clone(),
            modes: args.modes.clone(),
            points,
        })?,
    };
    args.output.write(&content)?;
    Ok(0)
}

fn render_table(points: &[SweepPoint]) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>6} {:>4} {:<14} {:>7} {:>9} {:>10} {:>11} {:>11} {:>13} {:>13}",
        "n",
        "k",
        "mode",
        "arrays",
        "cycles",
        "area_mm2",
        "latency_us",
        "energy_nj",
        "kops",
        "kops_per_mm2"
    );
    for p in points {
        let _ = writeln!(
            s,
            "{:>6} {:>4} {:<14} {:>7} {:>9} {:>10.4} {:>11.3} {:>11.2} {:>13.1} {:>13.1}",
            p.n,
            p.k,
            p.mode.as_str(),
            p.physical_arrays,
            p.cycles,
            p.area_mm2,
            p.latency_us,
            p.energy_nj,
            p.throughput_kops,
            p.throughput_per_area
        );
    }
    s
}

fn render_csv(cfg: &RunConfig, points: &[SweepPoint]) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "# xbar-pmm sweep v1");
    let _ = writeln!(s, "# config: {}", cfg.echo_json());
    let _ = writeln!(s, "{CSV_HEADER}");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            p.n,
            p.k,
            p.mode.as_str(),
            p.physical_arrays,
            p.cycles,
            p.area_mm2,
            p.latency_us,
            p.energy_nj,
            p.throughput_kops,
            p.throughput_per_area
        );
    }
    s
}
