//! Single crossbar array model.
//!
//! An array holds R x C binary cells. A vector-matrix multiplication
//! drives a binary input vector on the rows and reads per-column counts
//! I_c = sum_j G[j][c] * v[j], digitized by a p-bit ADC shared across
//! `cols_per_adc` columns. ADC sharing affects timing and energy only;
//! the readout values themselves are produced column by column.
//!
//! The noise model, applied in this order: each cell in an active row
//! flips with probability `flip_prob`, each column count receives Gaussian
//! noise N(0, sigma^2), the sum is clamped to [0, R] and rounded, and the
//! ADC quantizes the result. With both knobs at zero the noisy path is
//! bit-identical to the exact path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry, ADC, and noise knobs for one crossbar array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossbarConfig {
    pub rows: usize,
    pub cols: usize,
    /// ADC resolution in bits; output codes saturate at 2^bits - 1.
    pub adc_bits: u32,
    /// Columns sharing one ADC; must divide `cols`.
    pub cols_per_adc: usize,
    /// Standard deviation of per-column Gaussian read noise, in counts.
    pub noise_sigma: f64,
    /// Probability that a cell read flips its stored bit.
    pub flip_prob: f64,
}

impl Default for CrossbarConfig {
    fn default() -> Self {
        CrossbarConfig {
            rows: 128,
            cols: 128,
            adc_bits: 8,
            cols_per_adc: 8,
            noise_sigma: 0.0,
            flip_prob: 0.0,
        }
    }
}

impl CrossbarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::UnsupportedParameters(
                "crossbar dimensions must be positive".into(),
            ));
        }
        if self.adc_bits == 0 || self.adc_bits > 16 {
            return Err(Error::UnsupportedParameters(format!(
                "adc_bits must be in [1, 16], got {}",
                self.adc_bits
            )));
        }
        if self.cols_per_adc == 0 || !self.cols.is_multiple_of(self.cols_per_adc) {
            return Err(Error::UnsupportedParameters(format!(
                "cols_per_adc = {} must divide cols = {}",
                self.cols_per_adc, self.cols
            )));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) || self.noise_sigma < 0.0 {
            return Err(Error::UnsupportedParameters(
                "noise_sigma must be >= 0 and flip_prob in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Largest ADC output code.
    pub fn adc_max_code(&self) -> u32 {
        if self.adc_bits >= 32 {
            u32::MAX
        } else {
            (1u32 << self.adc_bits) - 1
        }
    }

    /// True when the ADC can represent every possible column count, so
    /// quantization never changes a value.
    pub fn adc_lossless(&self) -> bool {
        self.adc_max_code() as usize >= self.rows
    }

    /// ADC units serving one array.
    pub fn adcs_per_array(&self) -> usize {
        self.cols / self.cols_per_adc
    }
}

/// One programmed array. Cells are immutable after programming.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossbarArray {
    config: CrossbarConfig,
    /// Row-major cells, each 0 or 1.
    cells: Vec<u8>,
    all_zero: bool,
}

/// Result of one vector-matrix multiplication.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnReadout {
    /// Per-column counts before quantization. On the exact path these are
    /// the true sums; on the noisy path, post-noise clamped and rounded.
    pub raw: Vec<u32>,
    /// ADC output codes, saturating at 2^adc_bits - 1.
    pub quantized: Vec<u32>,
    /// Conversions performed: one per column.
    pub adc_conversions: u64,
}

impl CrossbarArray {
    /// Programs a rows x cols binary matrix (row-major) into a new array.
    pub fn program(config: CrossbarConfig, bits: &[u8]) -> Result<Self> {
        config.validate()?;
        if bits.len() != config.rows * config.cols {
            return Err(Error::ShapeMismatch {
                context: "crossbar programming bits",
                expected: config.rows * config.cols,
                got: bits.len(),
            });
        }
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::RangeExceeded {
                value: b as u128,
                bound: 2,
            });
        }
        Ok(CrossbarArray {
            config,
            cells: bits.to_vec(),
            all_zero: bits.iter().all(|&b| b == 0),
        })
    }

    pub fn config(&self) -> &CrossbarConfig {
        &self.config
    }

    pub fn cell(&self, r: usize, c: usize) -> u8 {
        self.cells[r * self.config.cols + c]
    }

    pub fn is_all_zero(&self) -> bool {
        self.all_zero
    }

    fn check_input(&self, v: &[u8]) -> Result<()> {
        if v.len() != self.config.rows {
            return Err(Error::ShapeMismatch {
                context: "vmm input vector",
                expected: self.config.rows,
                got: v.len(),
            });
        }
        if let Some(&b) = v.iter().find(|&&b| b > 1) {
            return Err(Error::RangeExceeded {
                value: b as u128,
                bound: 2,
            });
        }
        Ok(())
    }

    /// Noise-free vector-matrix multiplication.
    pub fn vmm_exact(&self, v: &[u8]) -> Result<ColumnReadout> {
        self.check_input(v)?;
        let cols = self.config.cols;
        let mut raw = vec![0u32; cols];
        if !self.all_zero {
            for (j, &vj) in v.iter().enumerate() {
                if vj == 0 {
                    continue;
                }
                let row = &self.cells[j * cols..(j + 1) * cols];
                for (acc, &cell) in raw.iter_mut().zip(row) {
                    *acc += cell as u32;
                }
            }
        }
        Ok(self.finish_readout(raw))
    }

    /// Vector-matrix multiplication with the analog noise model. The
    /// output is a deterministic function of (cells, input, seed); draw
    /// order is fixed as active rows ascending, then columns ascending.
    pub fn vmm_noisy(&self, v: &[u8], seed: u64) -> Result<ColumnReadout> {
        self.check_input(v)?;
        let cfg = &self.config;
        if cfg.flip_prob == 0.0 && cfg.noise_sigma == 0.0 {
            return self.vmm_exact(v);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = cfg.cols;
        let mut counts = vec![0u32; cols];
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0 {
                continue;
            }
            let row = &self.cells[j * cols..(j + 1) * cols];
            if cfg.flip_prob > 0.0 {
                for (acc, &cell) in counts.iter_mut().zip(row) {
                    let read = if rng.gen_bool(cfg.flip_prob) {
                        cell ^ 1
                    } else {
                        cell
                    };
                    *acc += read as u32;
                }
            } else {
                for (acc, &cell) in counts.iter_mut().zip(row) {
                    *acc += cell as u32;
                }
            }
        }
        let mut raw = vec![0u32; cols];
        if cfg.noise_sigma > 0.0 {
            let normal = Normal::new(0.0, cfg.noise_sigma).expect("validated sigma");
            for (out, &count) in raw.iter_mut().zip(&counts) {
                let noisy = count as f64 + normal.sample(&mut rng);
                *out = noisy.round().clamp(0.0, cfg.rows as f64) as u32;
            }
        } else {
            raw.copy_from_slice(&counts);
        }
        Ok(self.finish_readout(raw))
    }

    fn finish_readout(&self, raw: Vec<u32>) -> ColumnReadout {
        let max_code = self.config.adc_max_code();
        let quantized = raw.iter().map(|&r| r.min(max_code)).collect();
        ColumnReadout {
            adc_conversions: self.config.cols as u64,
            raw,
            quantized,
        }
    }
}
