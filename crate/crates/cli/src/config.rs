//! Run configuration: defaults, TOML file, then command-line overrides,
//! in that order. The resolved configuration is echoed into every output
//! artifact so any run can be reproduced from its own report.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use xbar_pmm::cost::ComponentCosts;
use xbar_pmm::fabric::pipeline::StageTiming;
use xbar_pmm::fabric::{FabricConfig, DEFAULT_FREQUENCY_MHZ};
use xbar_pmm::mapping::MappingMode;
use xbar_pmm::ring::{default_modulus, ModulusPoly, RingParams};
use xbar_pmm::xbar::CrossbarConfig;

use crate::CliError;

/// Modulus polynomial choice as it appears on the command line and in
/// config files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiArg {
    /// x^n + 1 (negacyclic convolution).
    Plus,
    /// x^n - 1 (cyclic convolution).
    Minus,
}

impl From<PhiArg> for ModulusPoly {
    fn from(p: PhiArg) -> Self {
        match p {
            PhiArg::Plus => ModulusPoly::XnPlus1,
            PhiArg::Minus => ModulusPoly::XnMinus1,
        }
    }
}

/// Weight mapping style as it appears on the command line and in config
/// files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    BitMapping,
    Conventional,
}

impl From<ModeArg> for MappingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::BitMapping => MappingMode::BitMapping,
            ModeArg::Conventional => MappingMode::Conventional,
        }
    }
}

impl From<MappingMode> for ModeArg {
    fn from(m: MappingMode) -> Self {
        match m {
            MappingMode::BitMapping => ModeArg::BitMapping,
            MappingMode::Conventional => ModeArg::Conventional,
        }
    }
}

/// Output encoding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    #[default]
    Table,
    Csv,
    Json,
}

/// One run's worth of parameters. Serializable so the echo in a report
/// can be fed back in via `--config`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Polynomial degree n.
    pub degree: usize,
    /// Coefficient bit width k; sets the modulus to 2^k - 1 unless
    /// `modulus` is given explicitly.
    pub bitwidth: u32,
    /// Explicit coefficient modulus; overrides `bitwidth`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulus: Option<u64>,
    pub phi: PhiArg,
    pub mode: ModeArg,
    /// Crossbar rows per array.
    pub rows: usize,
    /// Crossbar columns per array.
    pub cols: usize,
    pub adc_bits: u32,
    pub cols_per_adc: usize,
    /// Physical array budget; plans exceeding it time-multiplex.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arrays: Option<usize>,
    /// ADC read-noise standard deviation in counts; 0 runs exact.
    pub sigma: f64,
    pub seed: u64,
    pub frequency_mhz: f64,
    /// Operations per cost-report batch.
    pub batch: usize,
    /// Component cost table path; the built-in calibrated table when
    /// absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub costs: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let xbar = CrossbarConfig::default();
        RunConfig {
            degree: 256,
            bitwidth: 16,
            modulus: None,
            phi: PhiArg::Plus,
            mode: ModeArg::BitMapping,
            rows: xbar.rows,
            cols: xbar.cols,
            adc_bits: xbar.adc_bits,
            cols_per_adc: xbar.cols_per_adc,
            arrays: None,
            sigma: 0.0,
            seed: 0,
            frequency_mhz: DEFAULT_FREQUENCY_MHZ,
            batch: 1,
            costs: None,
        }
    }
}

impl RunConfig {
    /// Loads the layered configuration: defaults, then the TOML file if
    /// given, then individual flag overrides.
    pub fn resolve(args: &ConfigArgs) -> Result<RunConfig, CliError> {
        let mut cfg = match &args.config {
            Some(path) => Self::from_toml_file(path)?,
            None => RunConfig::default(),
        };
        args.apply(&mut cfg);
        cfg.normalize();
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
    }

    /// Fills the derived fields so the echoed configuration is fully
    /// explicit: the modulus is always spelled out and the bit width
    /// always matches it.
    fn normalize(&mut self) {
        let q = self.modulus.unwrap_or_else(|| default_modulus(self.bitwidth));
        self.modulus = Some(q);
        self.bitwidth = xbar_pmm::ring::bits_of(q);
    }

    pub fn ring(&self) -> Result<RingParams, CliError> {
        let q = self.modulus.unwrap_or_else(|| default_modulus(self.bitwidth));
        Ok(RingParams::new(self.degree, q, self.phi.into())?)
    }

    pub fn xbar(&self) -> CrossbarConfig {
        CrossbarConfig {
            rows: self.rows,
            cols: self.cols,
            adc_bits: self.adc_bits,
            cols_per_adc: self.cols_per_adc,
            noise_sigma: self.sigma,
            flip_prob: 0.0,
        }
    }

    pub fn fabric_config(&self) -> Result<FabricConfig, CliError> {
        let cfg = FabricConfig {
            xbar: self.xbar(),
            ring: self.ring()?,
            mode: self.mode.into(),
            array_budget: self.arrays,
            frequency_mhz: self.frequency_mhz,
            timing: StageTiming::default(),
            dedup: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads the cost table, overriding its clock with the configured
    /// frequency so timing-derived figures agree across the report.
    pub fn costs(&self) -> Result<ComponentCosts, CliError> {
        let mut costs = match &self.costs {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::config(format!("cannot read {}: {e}", path.display()))
                })?;
                ComponentCosts::from_config_str(&text)?
            }
            None => ComponentCosts::default_calibrated(),
        };
        costs.frequency_mhz = self.frequency_mhz;
        Ok(costs)
    }

    /// Stable TOML rendering of the resolved configuration.
    pub fn echo_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# config serialization failed: {e}\n"))
    }

    /// Single-line JSON rendering for CSV header comments.
    pub fn echo_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|e| format!("\"config error: {e}\""))
    }
}

/// Flags shared by the point commands; every field overrides the
/// matching `RunConfig` entry.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// TOML run configuration; flags override its fields.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Polynomial degree n (power of two).
    #[arg(long)]
    pub degree: Option<usize>,
    /// Coefficient bit width k; modulus defaults to 2^k - 1.
    #[arg(long)]
    pub bitwidth: Option<u32>,
    /// Explicit coefficient modulus q (odd); overrides --bitwidth.
    #[arg(long)]
    pub modulus: Option<u64>,
    /// Ring flavor: x^n + 1 or x^n - 1.
    #[arg(long, value_enum)]
    pub phi: Option<PhiArg>,
    /// Weight mapping style.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Crossbar rows per array.
    #[arg(long)]
    pub rows: Option<usize>,
    /// Crossbar columns per array.
    #[arg(long)]
    pub cols: Option<usize>,
    /// ADC resolution in bits.
    #[arg(long)]
    pub adc_bits: Option<u32>,
    /// Columns sharing one ADC.
    #[arg(long)]
    pub cols_per_adc: Option<usize>,
    /// Physical array budget (time-multiplex beyond it).
    #[arg(long)]
    pub arrays: Option<usize>,
    /// ADC read-noise sigma in counts; 0 runs exact.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Seed for operand sampling and noise streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Clock frequency in MHz.
    #[arg(long)]
    pub frequency_mhz: Option<f64>,
    /// Operations per cost-report batch.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Component cost table path.
    #[arg(long, value_name = "PATH")]
    pub costs: Option<PathBuf>,
}

impl ConfigArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.degree {
            cfg.degree = v;
        }
        if let Some(v) = self.bitwidth {
            cfg.bitwidth = v;
            if self.modulus.is_none() {
                cfg.modulus = None;
            }
        }
        if let Some(v) = self.modulus {
            cfg.modulus = Some(v);
        }
        if let Some(v) = self.phi {
            cfg.phi = v;
        }
        if let Some(v) = self.mode {
            cfg.mode = v;
        }
        if let Some(v) = self.rows {
            cfg.rows = v;
        }
        if let Some(v) = self.cols {
            cfg.cols = v;
        }
        if let Some(v) = self.adc_bits {
            cfg.adc_bits = v;
        }
        if let Some(v) = self.cols_per_adc {
            cfg.cols_per_adc = v;
        }
        if let Some(v) = self.arrays {
            cfg.arrays = Some(v);
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.frequency_mhz {
            cfg.frequency_mhz = v;
        }
        if let Some(v) = self.batch {
            cfg.batch = v;
        }
        if let Some(v) = &self.costs {
            cfg.costs = Some(v.clone());
        }
    }
}
