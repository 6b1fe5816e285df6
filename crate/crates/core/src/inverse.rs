//! Reconstruction of `(σ, H)` from spectral data by the method of spectral
//! mappings, with the model problem `L(0, 0)` as reference.
//!
//! For each `x` the truncated main equation
//!
//! ```text
//! φ_ni(x) + Σ_{k ≤ N, j} (−1)^j α_kj D̃(x, λ_ni, λ_kj) φ_kj(x) = cos ρ_ni x
//! ```
//!
//! is solved in the coordinates `u_n = φ_n0`, `d_n = χ_n (φ_n0 − φ_n1)`,
//! `χ_n = |ρ_n0 − ρ_n1|^{-1}`. A pair with `ρ_n0 = ρ_n1` is collapsed to the
//! single unknown `u_n`.

use crate::error::{Result, SlError};
use crate::forward::tail_fraction;
use crate::grid::{l2_remainder_norm, RealGrid};
use crate::potential::PotentialSigma;
use crate::scalar::{half_sinc, principal_rho};
use crate::spectral::{model_alpha, SpectralSequence};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Pivot ratio below which a per-`x` system counts as singular.
pub const PIVOT_TOL: f64 = 1e-12;
/// Relative `|ρ_n0 − ρ_n1|` below which a pair is collapsed.
pub const COLLAPSE_TOL: f64 = 1e-8;
/// L₂ tolerance of the ε₀ cross-check.
pub const CONSISTENCY_TOL: f64 = 1e-2;

/// `D̃(x, λ, μ) = ∫_0^x cos ρt cos θt dt` with `λ = ρ²`, `μ = θ²`.
pub fn dtilde(x: f64, lambda: f64, mu: f64) -> f64 {
    dtilde_rho(x, principal_rho(lambda), principal_rho(mu))
}

fn dtilde_rho(x: f64, rho: Complex64, theta: Complex64) -> f64 {
    (half_sinc(rho - theta, x) + half_sinc(rho + theta, x)).re
}

/// `cos ρ₀x − cos ρ₁x = −2 sin((ρ₀+ρ₁)x/2) sin((ρ₀−ρ₁)x/2)`.
pub fn cos_difference(rho0: Complex64, rho1: Complex64, x: f64) -> f64 {
    (-2.0 * ((rho0 + rho1) * (x / 2.0)).sin() * ((rho0 - rho1) * (x / 2.0)).sin()).re
}

/// Measured data on sheet 0 and model data on sheet 1, `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSheetData {
    pub n_max: usize,
    pub lambda: Vec<[f64; 2]>,
    pub alpha: Vec<[f64; 2]>,
    pub rho: Vec<[Complex64; 2]>,
    /// `|ρ_n0 − ρ_n1| + |α_n0 − α_n1|`.
    pub xi: Vec<f64>,
    /// `|ρ_n0 − ρ_n1|^{-1}`, zero for collapsed pairs.
    pub chi: Vec<f64>,
    pub collapsed: Vec<bool>,
}

impl TwoSheetData {
    pub fn size(&self) -> usize {
        self.n_max + 1
    }
}

/// Pairs the first `N + 1` measured data with the model data.
pub fn complete_data(measured: &SpectralSequence, n_max: usize) -> Result<TwoSheetData> {
    if measured.len() < n_max + 1 {
        return Err(SlError::Invalid(format!(
            "need {} data, got {}",
            n_max + 1,
            measured.len()
        )));
    }
    let mut out = TwoSheetData {
        n_max,
        lambda: Vec::new(),
        alpha: Vec::new(),
        rho: Vec::new(),
        xi: Vec::new(),
        chi: Vec::new(),
        collapsed: Vec::new(),
    };
    for n in 0..=n_max {
        let d = measured.get(n).expect("length checked");
        let model_lambda = (n * n) as f64;
        let r0 = d.rho;
        let r1 = principal_rho(model_lambda);
        let gap = (r0 - r1).norm();
        let collapsed = gap <= COLLAPSE_TOL * r1.norm().max(1.0);
        out.lambda.push([d.lambda, model_lambda]);
        out.alpha.push([d.alpha, model_alpha(n)]);
        out.rho.push([r0, r1]);
        out.xi.push(gap + (d.alpha - model_alpha(n)).abs());
        out.chi.push(if collapsed { 0.0 } else { 1.0 / gap });
        out.collapsed.push(collapsed);
    }
    for n in 0..=n_max {
        for k in 0..=n_max {
            let (a, b) = (out.lambda[n][0], out.lambda[k][1]);
            if n != k && (a - b).abs() <= 1e-12 * b.abs().max(1.0) {
                return Err(SlError::DataCollision { n, k, lambda: a });
            }
        }
    }
    Ok(out)
}

/// `R̃_{ni,kj}(x)`.
fn r_entry(x: f64, data: &TwoSheetData, n: usize, i: usize, k: usize, j: usize) -> f64 {
    let sign = if j == 0 { 1.0 } else { -1.0 };
    sign * data.alpha[k][j] * dtilde_rho(x, data.rho[n][i], data.rho[k][j])
}

/// `R̃_{n0,kj}(x) − R̃_{n1,kj}(x)`.
fn r_row_difference(x: f64, data: &TwoSheetData, n: usize, k: usize, j: usize) -> f64 {
    r_entry(x, data, n, 0, k, j) - r_entry(x, data, n, 1, k, j)
}

/// Truncated main equation at one point, in weighted coordinates.
/// Unknowns are ordered `u_0..u_N, d_0..d_N`.
#[derive(Debug, Clone)]
pub struct MainEquationSystem {
    pub x: f64,
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub cond_estimate: f64,
}

impl MainEquationSystem {
    /// Largest absolute row sum of `matrix − I`.
    pub fn perturbation_norm(&self) -> f64 {
        let n = self.matrix.nrows();
        (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| (self.matrix[(r, c)] - if r == c { 1.0 } else { 0.0 }).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Factorizes, rejects near-singular matrices and returns `(solution,
/// cond₁)`.
fn lu_solve(x: f64, matrix: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let scale = matrix.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let lu = matrix.clone().lu();
    let u = lu.u();
    let min_pivot = u.diagonal().iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let pivot = if scale > 0.0 { min_pivot / scale } else { 0.0 };
    if !(pivot >= PIVOT_TOL) {
        return Err(SlError::Solvability { x, pivot });
    }
    let inv = lu.try_inverse().ok_or(SlError::Solvability { x, pivot })?;
    let cond = col_norm1(matrix) * col_norm1(&inv);
    let sol = lu.solve(rhs).ok_or(SlError::Solvability { x, pivot })?;
    Ok((sol, cond))
}

/// Induced 1-norm (largest absolute column sum).
fn col_norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn assemble_weighted(x: f64, data: &TwoSheetData) -> (DMatrix<f64>, DVector<f64>) {
    let s = data.size();
    let mut a = DMatrix::<f64>::zeros(2 * s, 2 * s);
    let mut b = DVector::<f64>::zeros(2 * s);
    for n in 0..s {
        // u-row: raw row (n, 0)
        a[(n, n)] += 1.0;
        for k in 0..s {
            a[(n, k)] += r_entry(x, data, n, 0, k, 0) + r_entry(x, data, n, 0, k, 1);
            if !data.collapsed[k] {
                a[(n, s + k)] -= r_entry(x, data, n, 0, k, 1) / data.chi[k];
            }
        }
        b[n] = (data.rho[n][0] * x).cos().re;

        // d-row: χ_n (raw row (n, 0) − raw row (n, 1)), or d_n = 0
        a[(s + n, s + n)] = 1.0;
        if data.collapsed[n] {
            continue;
        }
        let chi = data.chi[n];
        for k in 0..s {
            let (d0, d1) = (r_row_difference(x, data, n, k, 0), r_row_difference(x, data, n, k, 1));
            a[(s + n, k)] += chi * (d0 + d1);
            if !data.collapsed[k] {
                a[(s + n, s + k)] -= chi * d1 / data.chi[k];
            }
        }
        b[s + n] = chi * cos_difference(data.rho[n][0], data.rho[n][1], x);
    }
    (a, b)
}

pub fn build_main_system(x: f64, data: &TwoSheetData) -> Result<MainEquationSystem> {
    if !(0.0..=PI).contains(&x) {
        return Err(SlError::Invalid(format!("x = {x} outside [0, pi]")));
    }
    let (matrix, rhs) = assemble_weighted(x, data);
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(SlError::Range(format!("non-finite main-equation entry at x = {x}")));
    }
    let (_, cond_estimate) = lu_solve(x, &matrix, &rhs)?;
    Ok(MainEquationSystem {
        x,
        matrix,
        rhs,
        cond_estimate,
    })
}

/// The unweighted system in `φ_ni` directly, ordered `φ_00..φ_N0,
/// φ_01..φ_N1`.
pub fn build_raw_system(x: f64, data: &TwoSheetData) -> (DMatrix<f64>, DVector<f64>) {
    let s = data.size();
    let mut a = DMatrix::<f64>::identity(2 * s, 2 * s);
    let mut b = DVector::<f64>::zeros(2 * s);
    for n in 0..s {
        for i in 0..2 {
            let row = n + i * s;
            for k in 0..s {
                for j in 0..2 {
                    a[(row, k + j * s)] += r_entry(x, data, n, i, k, j);
                }
            }
            b[row] = (data.rho[n][i] * x).cos().re;
        }
    }
    (a, b)
}

/// Solves the raw system; returns `(φ, cond₁)` or a solvability error.
pub fn solve_raw_system(x: f64, data: &TwoSheetData) -> Result<(Vec<[f64; 2]>, f64)> {
    let (a, b) = build_raw_system(x, data);
    let (sol, cond) = lu_solve(x, &a, &b)?;
    let s = data.size();
    Ok(((0..s).map(|n| [sol[n], sol[n + s]]).collect(), cond))
}

/// `φ_ni(x_k)` at every grid node with per-node condition numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    pub grid: RealGrid,
    /// `values[k][n] = [φ_n0(x_k), φ_n1(x_k)]`.
    pub values: Vec<Vec<[f64; 2]>>,
    pub cond: Vec<f64>,
}

impl PhiTable {
    pub fn phi(&self, node: usize, n: usize, i: usize) -> f64 {
        self.values[node][n][i]
    }

    pub fn cond_max(&self) -> f64 {
        self.cond.iter().cloned().fold(0.0, f64::max)
    }
}

fn solve_point(x: f64, data: &TwoSheetData) -> Result<(Vec<[f64; 2]>, f64)> {
    let (matrix, rhs) = assemble_weighted(x, data);
    let (sol, cond) = lu_solve(x, &matrix, &rhs)?;
    let s = data.size();
    let phi = (0..s)
        .map(|n| {
            let u = sol[n];
            let v = if data.collapsed[n] { u } else { u - sol[s + n] / data.chi[n] };
            [u, v]
        })
        .collect();
    Ok((phi, cond))
}

pub fn solve_main_equation(grid: &RealGrid, data: &TwoSheetData) -> Result<PhiTable> {
    let rows = grid
        .points()
        .par_iter()
        .map(|&x| solve_point(x, data))
        .collect::<Result<Vec<_>>>()?;
    let (values, cond) = rows.into_iter().unzip();
    Ok(PhiTable {
        grid: grid.clone(),
        values,
        cond,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub sigma: PotentialSigma,
    pub h: f64,
    /// Direct formula at the grid nodes.
    pub sigma_nodes: Vec<f64>,
    pub phi: PhiTable,
    pub cond_max: f64,
    /// Contribution of the data beyond `N`; zero since the tail is the model.
    pub tail_bound: f64,
    /// L₂ gap between the direct σ and the `ε₀` path.
    pub consistency: f64,
    /// `|H − H^N|` between the two paths.
    pub h_consistency: f64,
}

/// `ε₀(x) = Σ (α_n0 φ_n0 cos ρ_n0 x − α_n1 φ_n1 cos ρ_n1 x)`.
fn epsilon0(table: &PhiTable, data: &TwoSheetData, node: usize) -> f64 {
    let x = table.grid.point(node);
    (0..data.size())
        .map(|n| {
            let c0 = (data.rho[n][0] * x).cos().re;
            let c1 = (data.rho[n][1] * x).cos().re;
            data.alpha[n][0] * table.phi(node, n, 0) * c0 - data.alpha[n][1] * table.phi(node, n, 1) * c1
        })
        .sum()
}

pub fn reconstruct(table: PhiTable, data: &TwoSheetData) -> Result<ReconstructionResult> {
    let grid = table.grid.clone();
    let m = grid.cells();
    let dalpha: f64 = data.alpha.iter().map(|a| a[0] - a[1]).sum();
    let eps: Vec<f64> = (0..=m).map(|k| epsilon0(&table, data, k)).collect();
    let sigma_nodes: Vec<f64> = eps.iter().map(|e| -2.0 * e + dalpha).collect();
    let h = -eps[m] + dalpha;
    let cells: Vec<f64> = (0..m).map(|j| 0.5 * (sigma_nodes[j] + sigma_nodes[j + 1])).collect();
    let sigma = PotentialSigma::new(grid.clone(), cells)?;

    // second path: q = −2 ε₀' on cells, σ^N = h^N + ∫ q, H^N = g^N + σ^N(π)
    let step = grid.step();
    let q: Vec<f64> = (0..m).map(|j| -2.0 * (eps[j + 1] - eps[j]) / step).collect();
    let mut alt = Vec::with_capacity(m + 1);
    let mut acc = -eps[0];
    alt.push(acc);
    for qj in &q {
        acc += qj * step;
        alt.push(acc);
    }
    let h_alt = eps[m] + alt[m];
    let gap: Vec<f64> = (0..m)
        .map(|j| 0.5 * (alt[j] + alt[j + 1]) - sigma.value(j))
        .collect();
    let consistency = (gap.iter().map(|g| g * g).sum::<f64>() * step).sqrt();
    let h_consistency = (h - h_alt).abs();
    if !(consistency <= CONSISTENCY_TOL) || !(h_consistency <= CONSISTENCY_TOL) {
        return Err(SlError::ReconstructionInconsistency(consistency.max(h_consistency)));
    }
    Ok(ReconstructionResult {
        sigma,
        h,
        sigma_nodes,
        cond_max: table.cond_max(),
        phi: table,
        tail_bound: 0.0,
        consistency,
        h_consistency,
    })
}

/// Complete, solve and reconstruct from the first `N + 1` data.
pub fn inverse(measured: &SpectralSequence, n_max: usize, grid: &RealGrid) -> Result<ReconstructionResult> {
    let data = complete_data(measured, n_max)?;
    let table = solve_main_equation(grid, &data)?;
    reconstruct(table, &data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationMode {
    /// Real `σ`, `H`: requires `α_n > 0`.
    SelfAdjoint,
    /// Only `α_n ≠ 0`.
    General,
}

/// Outcome of the necessary-and-sufficient checks on a finite data set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub mode: ValidationMode,
    pub finite: bool,
    pub alpha_admissible: bool,
    pub distinct: bool,
    /// Condition (i): finite, admissible weights, distinct eigenvalues.
    pub condition_i: bool,
    pub rho_remainder_norm: f64,
    pub alpha_remainder_norm: f64,
    pub rho_tail_fraction: f64,
    pub alpha_tail_fraction: f64,
    /// Condition (ii): both remainder sequences plateau.
    pub condition_ii: bool,
    pub messages: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.condition_i && self.condition_ii
    }
}

/// Largest share of the squared remainder norm the upper half of the
/// indices may carry for the sequence to count as `l₂`.
pub const PLATEAU_SHARE: f64 = 0.25;

pub fn validate_data(measured: &SpectralSequence, mode: ValidationMode) -> ValidationReport {
    let mut messages = Vec::new();
    let data = measured.data();
    let finite = data.iter().all(|d| d.lambda.is_finite() && d.alpha.is_finite());
    if !finite {
        messages.push("condition (i): non-finite eigenvalue or weight".to_string());
    }
    let bad_alpha: Vec<usize> = data
        .iter()
        .enumerate()
        .filter(|(_, d)| match mode {
            ValidationMode::SelfAdjoint => !(d.alpha > 0.0),
            ValidationMode::General => d.alpha == 0.0 || !d.alpha.is_finite(),
        })
        .map(|(n, _)| n)
        .collect();
    let alpha_admissible = bad_alpha.is_empty();
    if !alpha_admissible {
        let need = match mode {
            ValidationMode::SelfAdjoint => "alpha_n > 0",
            ValidationMode::General => "alpha_n != 0",
        };
        messages.push(format!("condition (i): {need} fails at n = {bad_alpha:?}"));
    }
    let distinct = measured.all_simple();
    if !distinct {
        messages.push("condition (i): eigenvalues are not pairwise distinct".to_string());
    }
    let condition_i = finite && alpha_admissible && distinct;

    let rho: Vec<f64> = data
        .iter()
        .enumerate()
        .map(|(n, d)| (d.rho - n as f64).norm())
        .collect();
    let alpha: Vec<f64> = data.iter().map(|d| d.alpha - 2.0 / PI).collect();
    let (rt, at) = (tail_fraction(&rho), tail_fraction(&alpha));
    let condition_ii = if data.len() < 5 || !finite {
        finite
    } else {
        rt <= PLATEAU_SHARE && at <= PLATEAU_SHARE
    };
    if !condition_ii {
        messages.push(format!(
            "condition (ii): remainders do not plateau (upper-half share rho {rt:.3}, alpha {at:.3}, limit {PLATEAU_SHARE})"
        ));
    }
    ValidationReport {
        mode,
        finite,
        alpha_admissible,
        distinct,
        condition_i,
        rho_remainder_norm: l2_remainder_norm(&rho),
        alpha_remainder_norm: l2_remainder_norm(&alpha),
        rho_tail_fraction: rt,
        alpha_tail_fraction: at,
        condition_ii,
        messages,
    }
}
