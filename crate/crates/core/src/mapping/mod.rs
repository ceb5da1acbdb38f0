//! Mapping of weight matrices onto fixed-size binary crossbar arrays.
//!
//! The weight matrix for a PMM is the convolution matrix of the resident
//! operand A: row r is A shifted right by r, so entry (r, c) = A[c - r].
//! It is never materialized densely; [`ConvMatrix`] computes entries on
//! demand. Dense matrices (used for transform twiddle tables and for
//! small demonstration cases) implement the same [`WeightSource`] trait.
//!
//! Two mapping styles are planned:
//!
//! - Bit mapping: weight bit b of the whole matrix goes to processing
//!   element b as a binary plane; one shift-adder per PE combines planes
//!   at the very end, so `shift_adder_count = k`.
//! - Conventional: the k bits of each weight occupy adjacent columns of
//!   the same array, one shift-add unit per weight group per array, so
//!   `shift_adder_count = logical_arrays * floor(cols / k)`. Weights
//!   never straddle an array boundary; leftover columns are padding.
//!
//! Tiles with identical binary content are deduplicated into shared
//! physical arrays. Deduplication reduces area (physical arrays) but not
//! energy or ADC activity, which follow logical activations.

mod plan;

pub use plan::{
    plan_bit_mapping, plan_conventional, plan_for_weights, LogicalTile, MappingMode, MappingPlan,
    PePlan, PlanOptions,
};

use crate::error::{Error, Result};
use crate::ring::{Polynomial, RingParams};
use crate::xbar::CrossbarConfig;

/// Read-only weight matrix with nonnegative integer entries.
pub trait WeightSource {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn entry(&self, r: usize, c: usize) -> u64;
    /// Bit width bound on entries; planning validates it against the
    /// requested slicing width.
    fn entry_bits(&self) -> u32;
}

/// Convolution matrix of a resident operand: n rows, 2n-1 columns,
/// entry (r, c) = A[c - r]. Stored implicitly.
pub struct ConvMatrix<'a> {
    pub params: &'a RingParams,
    pub generator: &'a Polynomial,
}

/// Builds the implicit convolution matrix for resident operand `a`.
pub fn build_conv_matrix<'a>(
    a: &'a Polynomial,
    p: &'a RingParams,
) -> Result<ConvMatrix<'a>> {
    crate::ring::check_operand(a, p)?;
    Ok(ConvMatrix {
        params: p,
        generator: a,
    })
}

impl WeightSource for ConvMatrix<'_> {
    fn rows(&self) -> usize {
        self.params.n
    }

    fn cols(&self) -> usize {
        2 * self.params.n - 1
    }

    fn entry(&self, r: usize, c: usize) -> u64 {
        debug_assert!(r < self.rows() && c < self.cols());
        if c >= r && c - r < self.params.n {
            self.generator.coeffs()[c - r]
        } else {
            0
        }
    }

    fn entry_bits(&self) -> u32 {
        self.params.k
    }
}

/// Explicitly stored weight matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseWeights {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
    entry_bits: u32,
}

impl DenseWeights {
    pub fn new(rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                context: "dense weights",
                expected: rows * cols,
                got: data.len(),
            });
        }
        let entry_bits = data
            .iter()
            .map(|&v| crate::ring::bits_of(v))
            .max()
            .unwrap_or(0)
            .max(1);
        Ok(DenseWeights {
            rows,
            cols,
            data,
            entry_bits,
        })
    }
}

impl WeightSource for DenseWeights {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn entry(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    fn entry_bits(&self) -> u32 {
        self.entry_bits
    }
}

/// View of one bit position of a weight matrix: a binary matrix of the
/// same shape with entry (r, c) = bit `bit_index` of the weight.
pub struct BitPlane<'a, W: WeightSource + ?Sized> {
    pub source: &'a W,
    pub bit_index: u32,
}

impl<W: WeightSource + ?Sized> BitPlane<'_, W> {
    pub fn rows(&self) -> usize {
        self.source.rows()
    }

    pub fn cols(&self) -> usize {
        self.source.cols()
    }

    pub fn entry(&self, r: usize, c: usize) -> u8 {
        ((self.source.entry(r, c) >> self.bit_index) & 1) as u8
    }
}

/// Slices a weight matrix into `k` bit planes, LSB first.
pub fn bit_slice_weights<W: WeightSource>(m: &W, k: u32) -> Result<Vec<BitPlane<'_, W>>> {
    if k == 0 || k > 64 {
        return Err(Error::UnsupportedParameters(format!(
            "bit width {k} must be in [1, 64]"
        )));
    }
    if m.entry_bits() > k {
        return Err(Error::RangeExceeded {
            value: m.entry_bits() as u128,
            bound: k as u128,
        });
    }
    Ok((0..k)
        .map(|bit_index| BitPlane {
            source: m,
            bit_index,
        })
        .collect())
}

/// Slices an input polynomial into `k` binary vectors, LSB at index 0.
/// Vector t holds bit t of every coefficient.
pub fn bit_slice_input(b: &Polynomial, k: u32) -> Result<Vec<Vec<u8>>> {
    if k == 0 || k > 64 {
        return Err(Error::UnsupportedParameters(format!(
            "bit width {k} must be in [1, 64]"
        )));
    }
    if let Some(&c) = b
        .coeffs()
        .iter()
        .find(|&&c| crate::ring::bits_of(c) > k)
    {
        return Err(Error::RangeExceeded {
            value: c as u128,
            bound: 1u128 << k,
        });
    }
    Ok((0..k)
        .map(|t| b.coeffs().iter().map(|&c| ((c >> t) & 1) as u8).collect())
        .collect())
}

/// Binary content of one R x C tile, bit-packed row-major. Equality and
/// hashing over the packed words drive deduplication.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TileBits {
    rows: usize,
    cols: usize,
    words: Vec<u64>,
}

impl TileBits {
    fn words_per_row(cols: usize) -> usize {
        cols.div_ceil(64)
    }

    fn zeroed(rows: usize, cols: usize) -> Self {
        TileBits {
            rows,
            cols,
            words: vec![0; rows * Self::words_per_row(cols)],
        }
    }

    fn set(&mut self, r: usize, c: usize) {
        let wpr = Self::words_per_row(self.cols);
        self.words[r * wpr + c / 64] |= 1u64 << (c % 64);
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        let wpr = Self::words_per_row(self.cols);
        ((self.words[r * wpr + c / 64] >> (c % 64)) & 1) as u8
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Unpacks to row-major 0/1 bytes for array programming.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(self.get(r, c));
            }
        }
        out
    }
}

/// A bit plane split into R x C tiles with zero padding on the ragged
/// edges, row-major tile order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TileGrid {
    pub row_tiles: usize,
    pub col_tiles: usize,
    pub src_rows: usize,
    pub src_cols: usize,
    pub tiles: Vec<TileBits>,
}

impl TileGrid {
    pub fn tile(&self, tr: usize, tc: usize) -> &TileBits {
        &self.tiles[tr * self.col_tiles + tc]
    }
}

/// Splits a bit plane into tiles sized by the crossbar geometry.
pub fn tile<W: WeightSource>(plane: &BitPlane<'_, W>, cfg: &CrossbarConfig) -> Result<TileGrid> {
    cfg.validate()?;
    let (row_tiles, col_tiles) = grid_dims(plane.rows(), plane.cols(), cfg);
    let mut tiles = Vec::with_capacity(row_tiles * col_tiles);
    for tr in 0..row_tiles {
        for tc in 0..col_tiles {
            tiles.push(extract_plane_tile(plane, cfg, tr, tc));
        }
    }
    Ok(TileGrid {
        row_tiles,
        col_tiles,
        src_rows: plane.rows(),
        src_cols: plane.cols(),
        tiles,
    })
}

pub(crate) fn grid_dims(rows: usize, cols: usize, cfg: &CrossbarConfig) -> (usize, usize) {
    (rows.div_ceil(cfg.rows), cols.div_ceil(cfg.cols))
}

pub(crate) fn extract_plane_tile<W: WeightSource + ?Sized>(
    plane: &BitPlane<'_, W>,
    cfg: &CrossbarConfig,
    tr: usize,
    tc: usize,
) -> TileBits {
    let mut bits = TileBits::zeroed(cfg.rows, cfg.cols);
    let r0 = tr * cfg.rows;
    let c0 = tc * cfg.cols;
    let r_lim = cfg.rows.min(plane.rows().saturating_sub(r0));
    let c_lim = cfg.cols.min(plane.cols().saturating_sub(c0));
    for r in 0..r_lim {
        for c in 0..c_lim {
            if plane.entry(r0 + r, c0 + c) == 1 {
                bits.set(r, c);
            }
        }
    }
    bits
}

/// Tile content for the conventional layout: the k bits of each weight sit
/// in adjacent columns (MSB first), `wpa` weights per array.
pub(crate) fn extract_conventional_tile<W: WeightSource + ?Sized>(
    w: &W,
    k: u32,
    wpa: usize,
    cfg: &CrossbarConfig,
    tr: usize,
    tc: usize,
) -> TileBits {
    let mut bits = TileBits::zeroed(cfg.rows, cfg.cols);
    let r0 = tr * cfg.rows;
    let w0 = tc * wpa;
    let r_lim = cfg.rows.min(w.rows().saturating_sub(r0));
    for r in 0..r_lim {
        for g in 0..wpa {
            let wc = w0 + g;
            if wc >= w.cols() {
                break;
            }
            let entry = w.entry(r0 + r, wc);
            for j in 0..k as usize {
                let bit = (entry >> (k as usize - 1 - j)) & 1;
                if bit == 1 {
                    bits.set(r, g * k as usize + j);
                }
            }
        }
    }
    bits
}

/// Deduplicates tiles across a set of grids by exact content equality.
/// Returns the distinct physical tiles plus, per grid, the map from tile
/// index to physical id. Ids are assigned in first-seen order, so the
/// result is deterministic.
pub fn dedup(grids: &[TileGrid]) -> (Vec<TileBits>, Vec<Vec<usize>>) {
    let mut physical: Vec<TileBits> = Vec::new();
    let mut index: std::collections::HashMap<TileBits, usize> = std::collections::HashMap::new();
    let mut reuse = Vec::with_capacity(grids.len());
    for grid in grids {
        let mut ids = Vec::with_capacity(grid.tiles.len());
        for t in &grid.tiles {
            let id = *index.entry(t.clone()).or_insert_with(|| {
                physical.push(t.clone());
                physical.len() - 1
            });
            ids.push(id);
        }
        reuse.push(ids);
    }
    (physical, reuse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::ModulusPoly;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ring(n: usize, q: u64) -> RingParams {
        RingParams::new(n, q, ModulusPoly::XnPlus1).unwrap()
    }

    #[test]
    fn conv_matrix_worked_example() {
        // n = 4, A = [1, 2, 3, 4]: row r is A shifted right by r.
        let p = ring(4, 17);
        let a = Polynomial::new(vec![1, 2, 3, 4], &p).unwrap();
        let m = build_conv_matrix(&a, &p).unwrap();
        assert_eq!(m.rows(), 4);
        assert_eq!(m.cols(), 7);
        let expect = [
            [1, 2, 3, 4, 0, 0, 0],
            [0, 1, 2, 3, 4, 0, 0],
            [0, 0, 1, 2, 3, 4, 0],
            [0, 0, 0, 1, 2, 3, 4],
        ];
        for (r, row) in expect.iter().enumerate() {
            for (c, &want) in row.iter().enumerate() {
                assert_eq!(m.entry(r, c), want);
            }
        }
    }

    #[test]
    fn conv_matrix_times_input_is_convolution() {
        let p = ring(8, 255);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = Polynomial::random(&p, &mut rng);
        let b = Polynomial::random(&p, &mut rng);
        let m = build_conv_matrix(&a, &p).unwrap();
        let w = crate::ring::poly_mul_conv1d(&a, &b, &p).unwrap();
        // Column c of the product: sum over rows r of entry(r, c) * b[r].
        for c in 0..m.cols() {
            let mut acc = 0u128;
            for r in 0..m.rows() {
                acc += m.entry(r, c) as u128 * b.coeffs()[r] as u128;
            }
            assert_eq!(acc, w.vals()[c]);
        }
    }

    #[test]
    fn bit_planes_reconstruct_weights() {
        let p = ring(8, 255);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let a = Polynomial::random(&p, &mut rng);
        let m = build_conv_matrix(&a, &p).unwrap();
        let planes = bit_slice_weights(&m, p.k).unwrap();
        assert_eq!(planes.len(), p.k as usize);
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                let rebuilt: u64 = planes
                    .iter()
                    .map(|pl| (pl.entry(r, c) as u64) << pl.bit_index)
                    .sum();
                assert_eq!(rebuilt, m.entry(r, c));
            }
        }
    }

    #[test]
    fn bit_slice_weights_validates_width() {
        let w = DenseWeights::new(2, 2, vec![1, 2, 3, 4]).unwrap();
        assert!(bit_slice_weights(&w, 3).is_ok());
        assert!(bit_slice_weights(&w, 2).is_err());
        assert!(bit_slice_weights(&w, 0).is_err());
    }

    #[test]
    fn input_slicing_reconstructs() {
        let p = ring(16, 7681);
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let b = Polynomial::random(&p, &mut rng);
        let slices = bit_slice_input(&b, p.k).unwrap();
        assert_eq!(slices.len(), p.k as usize);
        for (i, &c) in b.coeffs().iter().enumerate() {
            let rebuilt: u64 = slices
                .iter()
                .enumerate()
                .map(|(t, s)| (s[i] as u64) << t)
                .sum();
            assert_eq!(rebuilt, c);
        }
    }

    #[test]
    fn tiling_pads_and_reassembles() {
        let cfg = CrossbarConfig {
            rows: 4,
            cols: 4,
            adc_bits: 4,
            cols_per_adc: 2,
            noise_sigma: 0.0,
            flip_prob: 0.0,
        };
        let p = ring(8, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let coeffs: Vec<u64> = (0..8).map(|_| rng.gen_range(0..3)).collect();
        let a = Polynomial::new(coeffs, &p).unwrap();
        let m = build_conv_matrix(&a, &p).unwrap();
        let planes = bit_slice_weights(&m, p.k).unwrap();
        for plane in &planes {
            let grid = tile(plane, &cfg).unwrap();
            // 8 rows -> 2 row tiles; 15 cols -> 4 col tiles.
            assert_eq!(grid.row_tiles, 2);
            assert_eq!(grid.col_tiles, 4);
            for r in 0..grid.row_tiles * cfg.rows {
                for c in 0..grid.col_tiles * cfg.cols {
                    let got = grid
                        .tile(r / cfg.rows, c / cfg.cols)
                        .get(r % cfg.rows, c % cfg.cols);
                    let expect = if r < plane.rows() && c < plane.cols() {
                        plane.entry(r, c)
                    } else {
                        0
                    };
                    assert_eq!(got, expect, "r={r} c={c}");
                }
            }
        }
    }

    #[test]
    fn dedup_collapses_identical_tiles() {
        let cfg = CrossbarConfig {
            rows: 4,
            cols: 4,
            adc_bits: 4,
            cols_per_adc: 2,
            noise_sigma: 0.0,
            flip_prob: 0.0,
        };
        // n = R = 4 makes both col tiles of each diagonal band repeat
        // across row tiles only when shapes line up; the zero plane always
        // collapses to one physical tile.
        let p = ring(8, 3);
        let a = Polynomial::zero(&p);
        let m = build_conv_matrix(&a, &p).unwrap();
        let planes = bit_slice_weights(&m, p.k).unwrap();
        let grids: Vec<TileGrid> = planes.iter().map(|pl| tile(pl, &cfg).unwrap()).collect();
        let (physical, reuse) = dedup(&grids);
        assert_eq!(physical.len(), 1);
        assert!(physical[0].is_zero());
        for ids in &reuse {
            assert!(ids.iter().all(|&id| id == 0));
        }
    }

    #[test]
    fn dedup_preserves_content() {
        let cfg = CrossbarConfig {
            rows: 8,
            cols: 8,
            adc_bits: 4,
            cols_per_adc: 4,
            noise_sigma: 0.0,
            flip_prob: 0.0,
        };
        let p = ring(16, 255);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = Polynomial::random(&p, &mut rng);
        let m = build_conv_matrix(&a, &p).unwrap();
        let planes = bit_slice_weights(&m, p.k).unwrap();
        let grids: Vec<TileGrid> = planes.iter().map(|pl| tile(pl, &cfg).unwrap()).collect();
        let (physical, reuse) = dedup(&grids);
        assert!(physical.len() <= grids.iter().map(|g| g.tiles.len()).sum());
        for (grid, ids) in grids.iter().zip(&reuse) {
            for (t, &id) in grid.tiles.iter().zip(ids) {
                assert_eq!(&physical[id], t);
            }
        }
    }

    #[test]
    fn conv_matrix_reuse_grows_with_column_tiles() {
        // Diagonal structure repeats along columns: the per-plane reuse
        // factor is at least floor((2n-1)/C) / ceil(n/R).
        let cfg = CrossbarConfig::default();
        let p = ring(256, 65535);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let a = Polynomial::random(&p, &mut rng);
        let m = build_conv_matrix(&a, &p).unwrap();
        let planes = bit_slice_weights(&m, p.k).unwrap();
        let bound = ((2 * p.n - 1) / cfg.cols) as f64 / (p.n.div_ceil(cfg.rows)) as f64;
        for plane in &planes {
            let grid = tile(plane, &cfg).unwrap();
            let (physical, _) = dedup(std::slice::from_ref(&grid));
            let factor = grid.tiles.len() as f64 / physical.len() as f64;
            assert!(
                factor >= bound,
                "reuse factor {factor} below structural bound {bound}"
            );
        }
    }
}
