use crate::error::{Result, SlError};
use crate::grid::RealGrid;
use crate::scalar::Scalar;
use num_complex::Complex64;

/// Antiderivative `σ` of a singular potential `q = σ'`, constant on each
/// grid cell.
///
/// `values[j]` is the value on `[x_j, x_{j+1})`. A Robin constant `h` at the
/// left end is absorbed into `values` by [`PotentialSigma::absorb_h`]; the
/// absorbed amount is kept in `shift` for the record.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSigma<T: Scalar = f64> {
    grid: RealGrid,
    values: Vec<T>,
    shift: T,
}

impl<T: Scalar> PotentialSigma<T> {
    pub fn new(grid: RealGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(SlError::Shape(format!(
                "{} cell values on a {}-cell grid",
                values.len(),
                grid.cells()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(SlError::Invalid(format!("sigma is not finite in cell {j}")));
        }
        Ok(Self {
            grid,
            values,
            shift: T::zero(),
        })
    }

    pub fn constant(grid: RealGrid, c: T) -> Self {
        let values = vec![c; grid.cells()];
        Self {
            grid,
            values,
            shift: T::zero(),
        }
    }

    pub fn zero(grid: RealGrid) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Shifts `σ` by the left Robin constant, turning `y^[1](0) − h y(0) = 0`
    /// into `y^[1](0) = 0`.
    pub fn absorb_h(mut self, h: T) -> Self {
        for v in &mut self.values {
            *v = *v + h;
        }
        self.shift = self.shift + h;
        self
    }

    pub fn grid(&self) -> &RealGrid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> T {
        self.values[cell]
    }

    pub fn shift(&self) -> T {
        self.shift
    }

    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.step();
        (self.values.iter().map(|v| v.modulus().powi(2)).sum::<f64>() * h).sqrt()
    }
}

impl PotentialSigma<f64> {
    /// Cell averages of `f`, by three-point Gauss–Legendre on each cell.
    pub fn from_fn(grid: RealGrid, f: impl Fn(f64) -> f64) -> Self {
        let h = grid.step();
        let g = 0.5 * (3.0f64 / 5.0).sqrt();
        let values = (0..grid.cells())
            .map(|j| {
                let c = grid.midpoint(j);
                (5.0 * f(c - g * h) + 8.0 * f(c) + 5.0 * f(c + g * h)) / 18.0
            })
            .collect();
        Self {
            grid,
            values,
            shift: 0.0,
        }
    }

    /// Linear interpolant of the cell values at the grid nodes. End nodes take
    /// the adjacent cell value.
    pub fn node_values(&self) -> Vec<f64> {
        let m = self.grid.cells();
        (0..=m)
            .map(|k| match k {
                0 => self.values[0],
                k if k == m => self.values[m - 1],
                k => 0.5 * (self.values[k - 1] + self.values[k]),
            })
            .collect()
    }

    /// Samples at every half step `q h / 2`, `q = 0..=2m`: nodes for even `q`,
    /// cell values for odd `q`.
    pub fn half_grid_values(&self) -> Vec<f64> {
        let nodes = self.node_values();
        (0..=2 * self.grid.cells())
            .map(|q| {
                if q % 2 == 0 {
                    nodes[q / 2]
                } else {
                    self.values[q / 2]
                }
            })
            .collect()
    }

    pub fn to_complex(&self) -> PotentialSigma<Complex64> {
        PotentialSigma {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            shift: Complex64::new(self.shift, 0.0),
        }
    }

    /// Pointwise sum with another potential on the same grid.
    pub fn add(&self, other: &PotentialSigma) -> Result<PotentialSigma> {
        check_same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        PotentialSigma::new(self.grid.clone(), values)
    }

    pub fn scaled(&self, s: f64) -> PotentialSigma {
        PotentialSigma {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
            shift: self.shift * s,
        }
    }
}

fn check_same_grid<T: Scalar>(a: &PotentialSigma<T>, b: &PotentialSigma<T>) -> Result<()> {
    if a.grid != b.grid {
        return Err(SlError::Shape(format!(
            "grids differ: {} vs {} cells",
            a.grid.cells(),
            b.grid.cells()
        )));
    }
    Ok(())
}

/// `L₂(0, π)` distance between two piecewise-constant potentials.
pub fn sigma_l2_distance<T: Scalar>(a: &PotentialSigma<T>, b: &PotentialSigma<T>) -> Result<f64> {
    check_same_grid(a, b)?;
    let h = a.grid.step();
    let sq: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| (x - y).modulus().powi(2))
        .sum();
    Ok((sq * h).sqrt())
}
