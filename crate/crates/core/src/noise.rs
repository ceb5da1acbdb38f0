//! Paired noise-sensitivity study: direct convolution mapping versus the
//! transform-domain mapping under the same analog noise model.
//!
//! For every (sigma, degree) configuration the study draws operand pairs,
//! runs both routes with the same nominal seed, and scores each run by
//! the per-coefficient error rate against the exact product, with the
//! mean wrap-aware coefficient distance reported alongside. The direct
//! route touches each output in a single crossbar pass; the transform
//! route needs two forward passes and an inverse pass, and any analog
//! perturbation in an early pass is smeared across every output by the
//! later dense passes. Its error rate therefore dominates the direct
//! route's.
//!
//! The per-configuration verdict is a one-sided paired t-test on the
//! rate difference at 95% confidence. `superior` means the sample shows
//! the transform rate strictly above the direct rate; `holds` means the
//! claimed ordering survives the test, which includes configurations
//! where both routes are saturated and tie on every draw.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fabric::ntt_on_xbar::NttFabric;
use crate::fabric::{mix_seed, Fabric, FabricConfig};
use crate::mapping::MappingMode;
use crate::par;
use crate::ring::{ModulusPoly, Polynomial, RingParams};
use crate::xbar::CrossbarConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Upper bounds on the one-sided 95% Student t critical value, stepped by
/// degrees of freedom. Each step uses the value at the smallest df in its
/// range, and the critical value only shrinks as df grows, so the test is
/// conservative everywhere in the range.
pub fn t_critical_one_sided_95(df: usize) -> f64 {
    match df {
        0..=1 => 6.314,
        2..=4 => 2.920,
        5..=9 => 2.015,
        10..=29 => 1.813,
        30..=98 => 1.698,
        _ => 1.661,
    }
}

/// Study grid. The modulus must support the transform for every degree in
/// the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseStudyGrid {
    pub sigmas: Vec<f64>,
    pub degrees: Vec<usize>,
    pub q: u64,
    pub phi: ModulusPoly,
    /// Operand pairs (and seeds) per configuration.
    pub pairs: usize,
    pub seed: u64,
}

impl Default for NoiseStudyGrid {
    /// 193 is the smallest modulus with a 64th root of unity, so it
    /// supports the negacyclic transform up to n = 32 while keeping the
    /// operand width, and with it the number of noisy conversions per
    /// output, as small as possible.
    fn default() -> Self {
        NoiseStudyGrid {
            sigmas: vec![0.25, 0.5, 1.0],
            degrees: vec![8, 16, 32],
            q: 193,
            phi: ModulusPoly::XnPlus1,
            pairs: 100,
            seed: 0x5eed,
        }
    }
}

/// Error scores of one paired draw. The error rate is the fraction of
/// output coefficients that differ from the exact product; the distance
/// is the mean wrap-aware gap to the exact coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub pair: usize,
    pub conv_error_rate: f64,
    pub ntt_error_rate: f64,
    pub conv_mean_distance: f64,
    pub ntt_mean_distance: f64,
}

impl PairSample {
    /// Paired difference in the primary metric, transform minus direct.
    pub fn diff(&self) -> f64 {
        self.ntt_error_rate - self.conv_error_rate
    }
}

/// Per-configuration outcome of the paired test on the error rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub sigma: f64,
    pub n: usize,
    pub pairs: usize,
    pub conv_mean_rate: f64,
    pub ntt_mean_rate: f64,
    pub conv_mean_distance: f64,
    pub ntt_mean_distance: f64,
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub t_stat: f64,
    pub t_critical: f64,
    /// True when the sample shows the transform route's error rate to be
    /// strictly above the direct route's at 95% confidence.
    pub superior: bool,
    /// True when the ordering "transform error rate >= direct error rate"
    /// survives a 5% one-sided test, i.e. the sample does not contradict
    /// it significantly.
    pub holds: bool,
    pub samples: Vec<PairSample>,
}

/// Whole-study outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseStudyReport {
    pub configs: Vec<ConfigSummary>,
    pub holding: usize,
    pub holding_fraction: f64,
    pub superior: usize,
}

impl NoiseStudyReport {
    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "noise study: {} configs, {} hold the ordering at 95% confidence ({:.0}%), {} strictly superior",
            self.configs.len(),
            self.holding,
            100.0 * self.holding_fraction,
            self.superior
        );
        for c in &self.configs {
            let verdict = if !c.holds {
                "refuted"
            } else if c.superior {
                "holds (strict)"
            } else {
                "holds"
            };
            let _ = writeln!(
                s,
                "sigma {:.2} n {:>4}: rate conv {:.4} ntt {:.4} | dist conv {:8.3} ntt {:8.3} | diff {:+.4} (sd {:.4}) t {:+.2} crit {:.2} -> {}",
                c.sigma,
                c.n,
                c.conv_mean_rate,
                c.ntt_mean_rate,
                c.conv_mean_distance,
                c.ntt_mean_distance,
                c.mean_diff,
                c.sd_diff,
                c.t_stat,
                c.t_critical,
                verdict
            );
        }
        s
    }
}

/// Runs the full grid. Pairs of one configuration run in parallel; the
/// transform fabric is shared across a configuration while the direct
/// fabric is rebuilt per pair because its resident operand changes.
pub fn run_study(grid: &NoiseStudyGrid, xbar_base: &CrossbarConfig) -> Result<NoiseStudyReport> {
    if grid.pairs < 2 {
        return Err(Error::UnsupportedParameters(format!(
            "paired test needs at least 2 pairs, got {}",
            grid.pairs
        )));
    }
    if grid.sigmas.iter().any(|&s| !(s.is_finite() && s >= 0.0)) {
        return Err(Error::UnsupportedParameters(
            "noise sigmas must be finite and nonnegative".into(),
        ));
    }
    let mut configs = Vec::new();
    for &sigma in &grid.sigmas {
        for &n in &grid.degrees {
            configs.push(run_config(grid, xbar_base, sigma, n)?);
        }
    }
    let holding = configs.iter().filter(|c| c.holds).count();
    let superior = configs.iter().filter(|c| c.superior).count();
    let holding_fraction = holding as f64 / configs.len().max(1) as f64;
    Ok(NoiseStudyReport {
        configs,
        holding,
        holding_fraction,
        superior,
    })
}

fn run_config(
    grid: &NoiseStudyGrid,
    xbar_base: &CrossbarConfig,
    sigma: f64,
    n: usize,
) -> Result<ConfigSummary> {
    let ring = RingParams::new(n, grid.q, grid.phi)?;
    let mut xbar = *xbar_base;
    xbar.noise_sigma = sigma;
    let mut cfg = FabricConfig::new(ring, MappingMode::BitMapping);
    cfg.xbar = xbar;
    let ntt_fabric = NttFabric::new(cfg)?;
    let samples = par::map_indexed(grid.pairs, |pair| -> Result<PairSample> {
        let draw_seed = mix_seed(&[grid.seed, sigma.to_bits(), n as u64, pair as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(draw_seed);
        let a = Polynomial::random(&ring, &mut rng);
        let b = Polynomial::random(&ring, &mut rng);
        let conv_fabric = Fabric::new(&a, cfg)?;
        let noise_seed = mix_seed(&[draw_seed, 1]);
        let (_, conv_stats) = conv_fabric.pmm_noisy_with_stats(&b, noise_seed)?;
        let (_, ntt_stats) = ntt_fabric.pmm_noisy_with_stats(&a, &b, noise_seed)?;
        Ok(PairSample {
            pair,
            conv_error_rate: conv_stats.error_rate,
            ntt_error_rate: ntt_stats.error_rate,
            conv_mean_distance: conv_stats.mean_distance,
            ntt_mean_distance: ntt_stats.mean_distance,
        })
    });
    let samples: Vec<PairSample> = samples.into_iter().collect::<Result<_>>()?;
    Ok(summarize(sigma, n, samples))
}

fn summarize(sigma: f64, n: usize, samples: Vec<PairSample>) -> ConfigSummary {
    let m = samples.len();
    let mean = |f: fn(&PairSample) -> f64| samples.iter().map(f).sum::<f64>() / m as f64;
    let conv_mean_rate = mean(|s| s.conv_error_rate);
    let ntt_mean_rate = mean(|s| s.ntt_error_rate);
    let conv_mean_distance = mean(|s| s.conv_mean_distance);
    let ntt_mean_distance = mean(|s| s.ntt_mean_distance);
    let diffs: Vec<f64> = samples.iter().map(|s| s.diff()).collect();
    let mean_diff = diffs.iter().sum::<f64>() / m as f64;
    let var = diffs
        .iter()
        .map(|d| (d - mean_diff) * (d - mean_diff))
        .sum::<f64>()
        / (m - 1) as f64;
    let sd_diff = var.sqrt();
    let t_critical = t_critical_one_sided_95(m - 1);
    let (t_stat, superior, holds) = if sd_diff == 0.0 {
        // Zero spread: every paired draw showed the same difference, so
        // the sample ordering is deterministic.
        let t = match mean_diff.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => f64::INFINITY,
            Some(std::cmp::Ordering::Less) => f64::NEG_INFINITY,
            _ => 0.0,
        };
        (t, mean_diff > 0.0, mean_diff >= 0.0)
    } else {
        let t = mean_diff / (sd_diff / (m as f64).sqrt());
        (t, t >= t_critical, t > -t_critical)
    };
    ConfigSummary {
        sigma,
        n,
        pairs: m,
        conv_mean_rate,
        ntt_mean_rate,
        conv_mean_distance,
        ntt_mean_distance,
        mean_diff,
        sd_diff,
        t_stat,
        t_critical,
        superior,
        holds,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_critical_steps_are_conservative() {
        // Published one-sided 95% values at the step edges.
        assert!(t_critical_one_sided_95(1) >= 6.313);
        assert!(t_critical_one_sided_95(2) >= 2.919);
        assert!(t_critical_one_sided_95(5) >= 2.015);
        assert!(t_critical_one_sided_95(10) >= 1.812);
        assert!(t_critical_one_sided_95(30) >= 1.697);
        assert!(t_critical_one_sided_95(99) >= 1.660);
        assert!(t_critical_one_sided_95(10_000) >= 1.645);
        // Monotone non-increasing.
        let mut prev = f64::INFINITY;
        for df in 1..200 {
            let t = t_critical_one_sided_95(df);
            assert!(t <= prev);
            prev = t;
        }
    }

    fn sample(pair: usize, conv: f64, ntt: f64) -> PairSample {
        PairSample {
            pair,
            conv_error_rate: conv,
            ntt_error_rate: ntt,
            conv_mean_distance: 10.0 * conv,
            ntt_mean_distance: 10.0 * ntt,
        }
    }

    #[test]
    fn summarize_known_samples() {
        let samples = vec![
            sample(0, 0.10, 0.30),
            sample(1, 0.20, 0.50),
            sample(2, 0.30, 0.40),
            sample(3, 0.10, 0.40),
        ];
        let s = summarize(0.5, 8, samples);
        assert!((s.conv_mean_rate - 0.175).abs() < 1e-12);
        assert!((s.ntt_mean_rate - 0.4).abs() < 1e-12);
        assert!((s.conv_mean_distance - 1.75).abs() < 1e-12);
        assert!((s.mean_diff - 0.225).abs() < 1e-12);
        // diffs = [0.2, 0.3, 0.1, 0.3] with mean 0.225; squared deviations
        // 0.000625, 0.005625, 0.015625, 0.005625; sample variance their sum
        // over 3.
        let expect_sd = (0.0275f64 / 3.0).sqrt();
        assert!((s.sd_diff - expect_sd).abs() < 1e-12);
        let expect_t = 0.225 / (expect_sd / 2.0);
        assert!((s.t_stat - expect_t).abs() < 1e-12);
        assert!(s.superior);
        assert!(s.holds);
    }

    #[test]
    fn summarize_zero_spread() {
        let s = summarize(0.1, 8, vec![sample(0, 0.1, 0.2), sample(1, 0.2, 0.3)]);
        assert!(s.superior);
        assert!(s.holds);
        let s = summarize(0.1, 8, vec![sample(0, 0.2, 0.1), sample(1, 0.3, 0.2)]);
        assert!(!s.superior);
        assert!(!s.holds);
        let s = summarize(0.1, 8, vec![sample(0, 0.5, 0.5), sample(1, 0.25, 0.25)]);
        assert!(!s.superior);
        assert!(s.holds);
        assert_eq!(s.t_stat, 0.0);
    }

    #[test]
    fn summarize_refutes_significant_reversal() {
        // Transform route consistently better by a wide margin: the
        // ordering claim must be refuted, not merely non-superior.
        let samples: Vec<PairSample> = (0..50)
            .map(|i| sample(i, 0.9, 0.2 + 0.001 * (i % 3) as f64))
            .collect();
        let s = summarize(0.5, 8, samples);
        assert!(s.t_stat < -s.t_critical);
        assert!(!s.holds);
    }

    #[test]
    fn study_rejects_degenerate_grids() {
        let grid = NoiseStudyGrid {
            pairs: 1,
            ..NoiseStudyGrid::default()
        };
        assert!(run_study(&grid, &CrossbarConfig::default()).is_err());
        let grid = NoiseStudyGrid {
            sigmas: vec![-0.5],
            ..NoiseStudyGrid::default()
        };
        assert!(run_study(&grid, &CrossbarConfig::default()).is_err());
        // q = 255 has no roots of unity of the needed order.
        let grid = NoiseStudyGrid {
            q: 255,
            pairs: 2,
            ..NoiseStudyGrid::default()
        };
        assert!(run_study(&grid, &CrossbarConfig::default()).is_err());
    }

    #[test]
    fn small_study_is_deterministic_and_ordered() {
        let grid = NoiseStudyGrid {
            sigmas: vec![0.5],
            degrees: vec![8],
            q: 7681,
            phi: ModulusPoly::XnPlus1,
            pairs: 12,
            seed: 42,
        };
        let xbar = CrossbarConfig::default();
        let a = run_study(&grid, &xbar).unwrap();
        let b = run_study(&grid, &xbar).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.configs.len(), 1);
        let c = &a.configs[0];
        assert_eq!(c.samples.len(), 12);
        assert!(c.samples.iter().enumerate().all(|(i, s)| s.pair == i));
        // Noise at sigma 0.5 produces measurable error on both routes.
        assert!(c.conv_mean_rate > 0.0);
        assert!(c.ntt_mean_rate > 0.0);
        assert!(c.conv_mean_distance > 0.0);
    }

    #[test]
    fn zero_sigma_study_sees_no_error() {
        let grid = NoiseStudyGrid {
            sigmas: vec![0.0],
            degrees: vec![8],
            q: 7681,
            phi: ModulusPoly::XnPlus1,
            pairs: 4,
            seed: 43,
        };
        let report = run_study(&grid, &CrossbarConfig::default()).unwrap();
        let c = &report.configs[0];
        assert_eq!(c.conv_mean_rate, 0.0);
        assert_eq!(c.ntt_mean_rate, 0.0);
        assert_eq!(c.conv_mean_distance, 0.0);
        assert!(c.holds);
        assert!(!c.superior);
        assert_eq!(report.holding, 1);
    }
}
