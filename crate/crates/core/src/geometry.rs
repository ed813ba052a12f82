//! Planar BS array layout and the sparsity supports derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{NrcError, Result};

/// Slack used when comparing distances against the sparsity threshold.
const DISTANCE_EPS: f64 = 1e-9;

/// Rectangular grid of parallel half-wave dipoles. Coordinates are in
/// wavelengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
    pub carrier_freq_hz: f64,
    positions: Vec<[f64; 2]>,
}

impl ArrayGeometry {
    pub const DEFAULT_SPACING: f64 = 0.5;
    pub const DEFAULT_CARRIER_HZ: f64 = 3.5e9;

    pub fn new(rows: usize, cols: usize, spacing: f64) -> Result<Self> {
        Self::with_carrier(rows, cols, spacing, Self::DEFAULT_CARRIER_HZ)
    }

    pub fn with_carrier(
        rows: usize,
        cols: usize,
        spacing: f64,
        carrier_freq_hz: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(NrcError::Dimension(format!(
                "array grid must be non-empty, got {rows}x{cols}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(NrcError::Parameter(format!(
                "element spacing must be positive, got {spacing}"
            )));
        }
        if !(carrier_freq_hz > 0.0) {
            return Err(NrcError::Parameter(
                "carrier frequency must be positive".into(),
            ));
        }
        // antenna index = row * cols + col
        let positions = (0..rows * cols)
            .map(|idx| {
                let (r, c) = (idx / cols, idx % cols);
                [c as f64 * spacing, r as f64 * spacing]
            })
            .collect();
        Ok(Self {
            rows,
            cols,
            spacing,
            carrier_freq_hz,
            positions,
        })
    }

    /// Near-square grid for `n` antennas: the largest divisor of `n` not
    /// exceeding `sqrt(n)` becomes the row count.
    pub fn near_square(n: usize, spacing: f64) -> Result<Self> {
        if n == 0 {
            return Err(NrcError::Dimension(
                "array needs at least one antenna".into(),
            ));
        }
        let mut rows = (n as f64).sqrt().floor() as usize;
        while rows > 1 && !n.is_multiple_of(rows) {
            rows -= 1;
        }
        Self::new(rows.max(1), n / rows.max(1), spacing)
    }

    pub fn n_antennas(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    /// Distance between antennas `i` and `j` in wavelengths.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.positions[i], self.positions[j]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    pub fn wavelength_m(&self) -> f64 {
        299_792_458.0 / self.carrier_freq_hz
    }

    /// Index pairs `(i, j)` with `i < j` whose separation is at most
    /// `radius_half_wavelengths` in units of lambda/2.
    pub fn pairs_within(&self, radius_half_wavelengths: f64) -> Vec<(usize, usize)> {
        let limit = 0.5 * radius_half_wavelengths + DISTANCE_EPS;
        let n = self.n_antennas();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.distance(i, j) <= limit {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }
}

/// Per-column support of the sparse BS NRC estimate.
///
/// Column `j` may only have non-zero rows at antennas within distance `D`
/// (in units of lambda/2) of antenna `j`, the diagonal included.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsitySupport {
    threshold: f64,
    supports: Vec<Vec<usize>>,
}

impl SparsitySupport {
    pub fn new(geometry: &ArrayGeometry, threshold_d: f64) -> Result<Self> {
        if !(threshold_d >= 0.0 && threshold_d.is_finite()) {
            return Err(NrcError::Parameter(format!(
                "sparsity threshold must be finite and non-negative, got {threshold_d}"
            )));
        }
        let limit = 0.5 * threshold_d + DISTANCE_EPS;
        let n = geometry.n_antennas();
        let supports = (0..n)
            .map(|j| {
                (0..n)
                    .filter(|&i| i == j || geometry.distance(i, j) <= limit)
                    .collect()
            })
            .collect();
        Ok(Self {
            threshold: threshold_d,
            supports,
        })
    }

    /// Every entry of every column is free.
    pub fn full(n: usize) -> Self {
        Self {
            threshold: f64::INFINITY,
            supports: (0..n).map(|_| (0..n).collect()).collect(),
        }
    }

    pub fn diagonal(n: usize) -> Self {
        Self {
            threshold: 0.0,
            supports: (0..n).map(|j| vec![j]).collect(),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn n_antennas(&self) -> usize {
        self.supports.len()
    }

    /// Sorted row indices allowed in column `j` (always contains `j`).
    pub fn support(&self, j: usize) -> &[usize] {
        &self.supports[j]
    }

    /// Coupled neighbours of antenna `j`, excluding `j` itself.
    pub fn neighbors(&self, j: usize) -> Vec<usize> {
        self.supports[j]
            .iter()
            .copied()
            .filter(|&i| i != j)
            .collect()
    }

    /// Number of non-zero rows `R_j` in column `j`.
    pub fn r_j(&self, j: usize) -> usize {
        self.supports[j].len()
    }

    /// `R(D) = C(D) + 1`, the largest column support.
    pub fn r_of_d(&self) -> usize {
        self.supports.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.supports[col].binary_search(&row).is_ok()
    }
}
