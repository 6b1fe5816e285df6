//! Uniform grids on `[0, π]` and the quadratures built on them.

use crate::error::{Result, SlError};
use std::f64::consts::PI;

/// Smallest admissible number of cells.
pub const MIN_CELLS: usize = 8;
/// Default number of cells.
pub const DEFAULT_CELLS: usize = 200;

/// Uniform grid `x_k = k π / m`, `k = 0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    cells: usize,
    points: Vec<f64>,
}

impl RealGrid {
    pub fn new(cells: usize) -> Result<Self> {
        if cells < MIN_CELLS {
            return Err(SlError::Invalid(format!(
                "grid needs at least {MIN_CELLS} cells, got {cells}"
            )));
        }
        let h = PI / cells as f64;
        let mut points: Vec<f64> = (0..=cells).map(|k| k as f64 * h).collect();
        points[cells] = PI;
        Ok(Self { cells, points })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Number of nodes, `cells + 1`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        PI / self.cells as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, k: usize) -> f64 {
        self.points[k]
    }

    pub fn midpoint(&self, cell: usize) -> f64 {
        (cell as f64 + 0.5) * self.step()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.cells).map(|j| self.midpoint(j)).collect()
    }

    /// Index of the cell containing `x`, clamped to `[0, cells)`.
    pub fn cell_of(&self, x: f64) -> usize {
        let j = (x / self.step()).floor();
        if j < 0.0 {
            0
        } else {
            (j as usize).min(self.cells - 1)
        }
    }

    /// Node index if `x` lies on the grid within `1e-9 h`.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let r = x / self.step();
        let k = r.round();
        if (r - k).abs() < 1e-9 && k >= 0.0 && k as usize <= self.cells {
            Some(k as usize)
        } else {
            None
        }
    }
}

/// Composite trapezoid rule over the grid nodes.
pub fn integrate_grid(samples: &[f64], grid: &RealGrid) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(SlError::Shape(format!(
            "{} samples on a {}-node grid",
            samples.len(),
            grid.len()
        )));
    }
    Ok(trapezoid(samples, grid.step()))
}

/// Trapezoid rule for uniformly spaced samples.
pub fn trapezoid(samples: &[f64], h: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = samples[1..n - 1].iter().sum();
            h * (inner + 0.5 * (samples[0] + samples[n - 1]))
        }
    }
}

/// Running trapezoid integral `∫_0^{x_k}`, one entry per sample.
pub fn cumulative_trapezoid(samples: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    for (k, &v) in samples.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * h * (samples[k - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Euclidean norm `(Σ a_n²)^{1/2}` of a finite sequence.
pub fn l2_remainder_norm(seq: &[f64]) -> f64 {
    seq.iter().map(|a| a * a).sum::<f64>().sqrt()
}
