//! `verify`: every simulated path against its software oracle.
//!
//! Five suite families run by default: the convolution fabric against
//! the reference product over a (degree, bitwidth, phi, mode) grid, the
//! transform fabric and the software transform against the same
//! reference on transform-capable rings, and Barrett reduction against
//! the plain remainder both randomly and exhaustively.

use clap::Args;
use serde::Serialize;
use xbar_pmm::fabric::FabricConfig;
use xbar_pmm::mapping::MappingMode;
use xbar_pmm::ring::ntt::ntt_context_new;
use xbar_pmm::ring::{default_modulus, ModulusPoly, RingParams};
use xbar_pmm::verify::{
    barrett_exhaustive, barrett_vs_remainder, fabric_vs_reference, ntt_fabric_vs_reference,
    ntt_software_vs_reference, EquivalenceReport,
};

use crate::config::FormatArg;
use crate::output::{to_json, OutputArgs};
use crate::CliError;

/// Moduli probed for transform support at each grid degree.
const TRANSFORM_MODULI: [u64; 3] = [17, 7681, 12289];
/// Bit widths of the random Barrett batches.
const BARRETT_BITS: [u32; 3] = [5, 16, 32];
/// Modulus small enough to reduce every admissible input.
const BARRETT_EXHAUSTIVE_Q: u64 = 17;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Degrees in the fabric-vs-oracle grid.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    pub degrees: Vec<usize>,
    /// Bit widths in the fabric-vs-oracle grid; each uses modulus 2^k - 1.
    #[arg(long, value_delimiter = ',', default_value = "4,8")]
    pub bitwidths: Vec<u32>,
    /// Random operand pairs per configuration.
    #[arg(long, default_value_t = 50)]
    pub pairs: usize,
    /// Random inputs per Barrett batch.
    #[arg(long, default_value_t = 20000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Swap in the off-by-one Barrett constant to confirm the oracle
    /// catches a corrupted datapath.
    #[arg(long, hide = true)]
    pub corrupt_barrett_mu: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Serialize)]
struct VerifyReport {
    degrees: Vec<usize>,
    bitwidths: Vec<u32>,
    pairs: usize,
    samples: usize,
    seed: u64,
    corrupt_barrett_mu: bool,
    /// Oracle-equivalence suite families exercised by this run.
    coverage: Vec<&'static str>,
    suites: Vec<EquivalenceReport>,
    total_cases: usize,
    total_mismatches: usize,
    passed: bool,
}

pub fn exec(args: &VerifyArgs) -> Result<i32, CliError> {
    let mut suites = Vec::new();
    let mut coverage = Vec::new();

    coverage.push("fabric_vs_reference");
    for &n in &args.degrees {
        for &k in &args.bitwidths {
            for phi in [ModulusPoly::XnPlus1, ModulusPoly::XnMinus1] {
                for mode in [MappingMode::BitMapping, MappingMode::Conventional] {
                    let ring = RingParams::new(n, default_modulus(k), phi)?;
                    let cfg = FabricConfig::new(ring, mode);
                    suites.push(fabric_vs_reference(
                        cfg,
                        args.pairs,
                        args.seed,
                        args.corrupt_barrett_mu,
                    )?);
                }
            }
        }
    }

    coverage.push("ntt_software_vs_reference");
    coverage.push("ntt_fabric_vs_reference");
    for &q in &TRANSFORM_MODULI {
        for &n in &args.degrees {
            for phi in [ModulusPoly::XnPlus1, ModulusPoly::XnMinus1] {
                let Ok(ring) = RingParams::new(n, q, phi) else {
                    continue;
                };
                if ntt_context_new(&ring).is_err() {
                    continue;
                }
                suites.push(ntt_software_vs_reference(ring, args.pairs, args.seed)?);
                let cfg = FabricConfig::new(ring, MappingMode::BitMapping);
                suites.push(ntt_fabric_vs_reference(cfg, args.pairs, args.seed)?);
            }
        }
    }

    coverage.push("barrett_vs_remainder");
    for &k in &BARRETT_BITS {
        suites.push(barrett_vs_remainder(
            default_modulus(k),
            args.samples,
            args.seed,
        )?);
    }
    coverage.push("barrett_exhaustive");
    suites.push(barrett_exhaustive(BARRETT_EXHAUSTIVE_Q)?);

    let total_cases: usize = suites.iter().map(|s| s.trials).sum();
    let total_mismatches: usize = suites.iter().map(|s| s.mismatches).sum();
    let passed = total_mismatches == 0;

    let content = match args.output.format {
        FormatArg::Table => render_table(&suites, &coverage, total_cases, total_mismatches),
        FormatArg::Csv => render_csv(args, &suites, total_cases, total_mismatches),
        FormatArg::Json => to_json(&VerifyReport {
            degrees: args.degrees.clone(),
            bitwidths: args.bitwidths.clone(),
            pairs: args.pairs,
            samples: args.samples,
            seed: args.seed,
            corrupt_barrett_mu: args.corrupt_barrett_mu,
            coverage,
            suites,
            total_cases,
            total_mismatches,
            passed,
        })?,
    };
    args.output.write(&content)?;
    Ok(if passed { 0 } else { 1 })
}

fn render_table(
    suites: &[EquivalenceReport],
    coverage: &[&'static str],
    total_cases: usize,
    total_mismatches: usize,
) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "verification");
    let _ = writeln!(s, "coverage: {}", coverage.join(", "));
    for report in suites {
        let _ = writeln!(s, "{}", report.render_text());
    }
    let _ = writeln!(
        s,
        "total: {} suites, {} cases, {} mismatches",
        suites.len(),
        total_cases,
        total_mismatches
    );
    let _ = writeln!(
        s,
        "result: {}",
        if total_mismatches == 0 { "PASS" } else { "FAIL" }
    );
    s
}

fn render_csv(
    args: &VerifyArgs,
    suites: &[EquivalenceReport],
    total_cases: usize,
    total_mismatches: usize,
) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "# xbar-pmm verify v1");
    let _ = writeln!(
        s,
        "# pairs={} samples={} seed={} corrupt_barrett_mu={}",
        args.pairs, args.samples, args.seed, args.corrupt_barrett_mu
    );
    let _ = writeln!(s, "suite,trials,mismatches");
    for report in suites {
        let _ = writeln!(s, "{},{},{}", report.label, report.trials, report.mismatches);
    }
    let _ = writeln!(
        s,
        "# total: {} suites, {} cases, {} mismatches",
        suites.len(),
        total_cases,
        total_mismatches
    );
    s
}
