//! Sample tables shared by the estimators.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// The crate-wide generator: ChaCha8, a counter-based stream cipher RNG.
pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n x d` table of finite reals, stored row-major (one row per sample).
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousDataset {
    n: usize,
    d: usize,
    cells: Vec<f64>,
}

impl ContinuousDataset {
    pub fn new(n: usize, d: usize, cells: Vec<f64>) -> Result<ContinuousDataset> {
        if cells.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: cells.len(),
            });
        }
        if let Some(pos) = cells.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite cell at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(ContinuousDataset { n, d, cells })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<ContinuousDataset> {
        let d = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        let cells = (0..n).flat_map(|r| columns.iter().map(move |c| c[r])).collect();
        ContinuousDataset::new(n, d, cells)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.d + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.cells[row * self.d..(row + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.cells.chunks(self.d.max(1)).take(self.n)
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, col)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.d).map(|c| self.column(c)).collect()
    }

    /// Applies `f(column, value)` to every cell.
    pub fn map(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<ContinuousDataset> {
        let d = self.d;
        let cells = self.cells.iter().enumerate().map(|(k, &v)| f(k % d, v)).collect();
        ContinuousDataset::new(self.n, d, cells)
    }

    /// Rows `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> ContinuousDataset {
        ContinuousDataset {
            n: end - start,
            d: self.d,
            cells: self.cells[start * self.d..end * self.d].to_vec(),
        }
    }
}

/// `n x d` table of category labels in `0..s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteDataset {
    n: usize,
    d: usize,
    s: usize,
    cells: Vec<u32>,
}

impl DiscreteDataset {
    pub fn new(n: usize, d: usize, s: usize, cells: Vec<u32>) -> Result<DiscreteDataset> {
        if n == 0 || s < 2 {
            return Err(Error::InvalidParameter(format!("need n >= 1 and s >= 2, got n={n}, s={s}")));
        }
        if cells.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: cells.len(),
            });
        }
        if let Some(v) = cells.iter().find(|&&v| v as usize >= s) {
            return Err(Error::InvalidData(format!("label {v} outside alphabet of size {s}")));
        }
        Ok(DiscreteDataset { n, d, s, cells })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn alphabet(&self) -> usize {
        self.s
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.cells[row * self.d + col]
    }

    pub fn column(&self, col: usize) -> Vec<u32> {
        (0..self.n).map(|r| self.get(r, col)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.cells.chunks(self.d.max(1)).take(self.n)
    }
}
