//! Data-parallel execution helpers.
//!
//! Batch drivers (oracle-equivalence runs, noise studies, cost sweeps)
//! funnel their per-item work through [`map_indexed`], which runs on rayon
//! when the `parallel` feature is enabled and sequentially otherwise.
//! [`map_indexed_seq`] is always sequential; the benchmark suite uses it
//! as the baseline when measuring parallel speedup. Output order is the
//! index order in every case, so results never depend on the executor.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to every index in [0, count), collecting results in index
/// order. Parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Applies `f` to every index in [0, count), collecting results in index
/// order. Sequential fallback used when the `parallel` feature is off.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Sequential counterpart of [`map_indexed`], available regardless of
/// features.
pub fn map_indexed_seq<U, F>(count: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..count).map(f).collect()
}
