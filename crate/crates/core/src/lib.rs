//! Functional and cycle-level simulator for a crossbar compute-in-memory
//! accelerator that performs polynomial modular multiplication (PMM) as a
//! one-dimensional convolution.
//!
//! The crate is organized in layers:
//!
//! - [`ring`]: exact arithmetic in Z_q[x]/(x^n +- 1), Barrett reduction,
//!   and the number-theoretic transform. `ring::pmm_reference` is the
//!   oracle all hardware paths are verified against.
//! - [`xbar`]: a single binary crossbar array with ADC readout and an
//!   optional analog noise model.
//! - [`mapping`]: convolution-matrix construction, bit slicing, tiling
//!   onto fixed-size arrays, content deduplication, and shift-adder
//!   allocation for the two mapping styles.
//! - [`fabric`]: the full accelerator, wiring mapped arrays into
//!   processing elements, the three-stage pipeline model, and the
//!   NTT-on-crossbar comparison path.
//! - [`cost`]: area, energy, latency, and throughput estimation driven by
//!   plan unit counts and pipeline event counters.
//! - [`noise`]: paired noise experiments comparing the convolution fabric
//!   against the NTT-on-crossbar fabric at matched seeds.
//! - [`verify`]: batched oracle-equivalence runs used by the command-line
//!   front end.
//!
//! Batch drivers parallelize with rayon when the default `parallel`
//! feature is enabled and fall back to plain iteration otherwise; results
//! are identical either way.

pub mod cost;
pub mod error;
pub mod fabric;
pub mod mapping;
pub mod noise;
pub mod par;
pub mod ring;
pub mod verify;
pub mod xbar;

pub use error::{Error, Result};
