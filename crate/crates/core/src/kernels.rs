//! Transformation-operator kernels `(K, N, C)`:
//!
//! ```text
//! φ(x, λ)     = cos ρx + ∫_0^x K(x, t) cos ρt dt,
//! φ^[1](x, λ) = −ρ sin ρx + ρ ∫_0^x N(x, t) sin ρt dt + C(x),
//! ```
//!
//! built by summing the Picard series of the Volterra-type system on the
//! triangle `0 ≤ t ≤ x ≤ π`. Each step costs `O(m²)`: every segment
//! integral runs along a diagonal or an anti-diagonal of the node lattice
//! and is read off a running trapezoid sum.

use crate::error::{Result, SlError};
use crate::grid::{cumulative_trapezoid, trapezoid, RealGrid};
use crate::potential::PotentialSigma;
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::io::Write;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 25;
/// Growth of the term norm beyond this multiple of the first term counts as
/// divergence.
const DIVERGENCE_FACTOR: f64 = 1e3;

/// Storage offset of node `(i, j)`, `j ≤ i`, in a row-major triangle.
#[inline]
fn tri(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

fn tri_len(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// Kernel samples at the lattice nodes `(x_i, t_j)`, `0 ≤ j ≤ i ≤ m`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTriple {
    pub grid: RealGrid,
    k: Vec<f64>,
    n: Vec<f64>,
    c: Vec<f64>,
    /// Picard steps taken.
    pub iterations: usize,
    /// Sup-norm of the last series term.
    pub residual: f64,
    /// Sup-norm of every series term, starting with the free term.
    pub history: Vec<f64>,
}

impl KernelTriple {
    fn zeros(grid: &RealGrid) -> Self {
        let m = grid.cells();
        Self {
            grid: grid.clone(),
            k: vec![0.0; tri_len(m)],
            n: vec![0.0; tri_len(m)],
            c: vec![0.0; m + 1],
            iterations: 0,
            residual: 0.0,
            history: Vec::new(),
        }
    }

    pub fn k(&self, i: usize, j: usize) -> f64 {
        self.k[tri(i, j)]
    }

    pub fn n(&self, i: usize, j: usize) -> f64 {
        self.n[tri(i, j)]
    }

    pub fn c(&self, i: usize) -> f64 {
        self.c[i]
    }

    /// `K(x_i, ·)` on `t_0..=t_i`.
    pub fn k_row(&self, i: usize) -> &[f64] {
        &self.k[tri(i, 0)..=tri(i, i)]
    }

    pub fn n_row(&self, i: usize) -> &[f64] {
        &self.n[tri(i, 0)..=tri(i, i)]
    }

    pub fn c_values(&self) -> &[f64] {
        &self.c
    }

    /// Largest absolute entry over all three kernels.
    pub fn sup_norm(&self) -> f64 {
        self.k
            .iter()
            .chain(&self.n)
            .chain(&self.c)
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.k.iter().chain(&self.n).chain(&self.c).all(|v| v.is_finite())
    }

    fn add_assign(&mut self, other: &KernelTriple) {
        for (a, b) in self.k.iter_mut().zip(&other.k) {
            *a += b;
        }
        for (a, b) in self.n.iter_mut().zip(&other.n) {
            *a += b;
        }
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += b;
        }
    }

    /// Rows `x,t,K,N` over the triangle.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "t", "K", "N"])?;
        let pts = self.grid.points();
        for i in 0..=self.grid.cells() {
            for j in 0..=i {
                w.write_record([
                    crate::io::format_num(pts[i]),
                    crate::io::format_num(pts[j]),
                    crate::io::format_num(self.k(i, j)),
                    crate::io::format_num(self.n(i, j)),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Rows `x,C`.
    pub fn write_c_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "C"])?;
        for (x, c) in self.grid.points().iter().zip(&self.c) {
            w.write_record([crate::io::format_num(*x), crate::io::format_num(*c)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `∫_0^{q h/2} σ²` for `q = 0..=2m`, exact for the piecewise-constant `σ`.
fn sigma_square_half_integrals(sigma: &PotentialSigma) -> Vec<f64> {
    let m = sigma.grid().cells();
    let hh = 0.5 * sigma.grid().step();
    let mut out = Vec::with_capacity(2 * m + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for q in 1..=2 * m {
        let v = sigma.value((q - 1) / 2);
        acc += v * v * hh;
        out.push(acc);
    }
    out
}

/// Free terms `(K₀, N₀, C₀)`.
pub fn initial_kernels(sigma: &PotentialSigma) -> KernelTriple {
    let grid = sigma.grid();
    let m = grid.cells();
    let sh = sigma.half_grid_values();
    let s2 = sigma_square_half_integrals(sigma);
    let mut out = KernelTriple::zeros(grid);
    for i in 0..=m {
        for j in 0..=i {
            let (p, e) = (i - j, i + j);
            let half_sum = 0.5 * (sh[e] + sh[p]);
            let half_diff = 0.5 * (sh[e] - sh[p]);
            let tail = 0.5 * (s2[2 * i] - s2[e]);
            out.k[tri(i, j)] = half_sum - 0.5 * s2[2 * i] - 0.5 * s2[p] + tail;
            out.n[tri(i, j)] = half_diff + 0.5 * s2[2 * i] + 0.5 * s2[p] + tail;
        }
        out.c[i] = -s2[2 * i];
    }
    out.history.push(out.sup_norm());
    out.residual = out.sup_norm();
    out
}

/// `∫_{x−t}^{x} F(s, s − x + t) w(s) ds` along the diagonals `i − j = p`.
fn diag_integrals(f: &[f64], w_node: &[f64], m: usize, h: f64) -> Vec<f64> {
    let diags: Vec<Vec<f64>> = (0..=m)
        .into_par_iter()
        .map(|p| {
            let g: Vec<f64> = (0..=m - p).map(|k| f[tri(p + k, k)] * w_node[p + k]).collect();
            cumulative_trapezoid(&g, h)
        })
        .collect();
    let mut out = vec![0.0; tri_len(m)];
    for (p, d) in diags.iter().enumerate() {
        for (k, v) in d.iter().enumerate() {
            out[tri(p + k, k)] = *v;
        }
    }
    out
}

/// `∫_{(x+t)/2}^{x} F(s, x + t − s) w(s) ds` along the anti-diagonals
/// `i + j = e`. For odd `e` the segment starts half a step off the lattice,
/// at the diagonal point `(eh/2, eh/2)`, where `F` is interpolated along the
/// diagonal and `w` is the cell value.
fn antidiag_integrals(f: &[f64], w_half: &[f64], m: usize, h: f64) -> Vec<f64> {
    let lines: Vec<(usize, Vec<f64>)> = (0..=2 * m)
        .into_par_iter()
        .map(|e| {
            let a_lo = e.div_ceil(2);
            let a_hi = e.min(m);
            let g: Vec<f64> = (a_lo..=a_hi).map(|a| f[tri(a, e - a)] * w_half[2 * a]).collect();
            let mut cum = cumulative_trapezoid(&g, h);
            if e % 2 == 1 {
                let lo = (e - 1) / 2;
                let f_mid = 0.5 * (f[tri(lo, lo)] + f[tri(lo + 1, lo + 1)]);
                let start = 0.25 * h * (f_mid * w_half[e] + g[0]);
                for v in &mut cum {
                    *v += start;
                }
            }
            (a_lo, cum)
        })
        .collect();
    let mut out = vec![0.0; tri_len(m)];
    for (e, (a_lo, cum)) in lines.iter().enumerate() {
        for (k, v) in cum.iter().enumerate() {
            let a = a_lo + k;
            out[tri(a, e - a)] = *v;
        }
    }
    out
}

/// The three segment integrals `A₁, A₂, A₃` of a kernel against a weight.
struct Segments {
    a1: Vec<f64>,
    a2: Vec<f64>,
    a3: Vec<f64>,
}

impl Segments {
    fn new(f: &[f64], w_half: &[f64], m: usize, h: f64) -> Self {
        let w_node: Vec<f64> = (0..=m).map(|a| w_half[2 * a]).collect();
        let a1 = diag_integrals(f, &w_node, m, h);
        let a3 = antidiag_integrals(f, w_half, m, h);
        // the A₂ segment at (x, t) is the A₃ segment at (x − t, 0)
        let mut a2 = vec![0.0; tri_len(m)];
        for i in 0..=m {
            for j in 0..=i {
                a2[tri(i, j)] = a3[tri(i - j, 0)];
            }
        }
        Self { a1, a2, a3 }
    }
}

/// One application of the integral operators to a series term.
pub fn picard_step(current: &KernelTriple, sigma: &PotentialSigma) -> Result<KernelTriple> {
    if current.grid != *sigma.grid() {
        return Err(SlError::Shape(format!(
            "kernel grid has {} cells, sigma has {}",
            current.grid.cells(),
            sigma.grid().cells()
        )));
    }
    let grid = sigma.grid();
    let m = grid.cells();
    let h = grid.step();
    let sh = sigma.half_grid_values();
    let sh2: Vec<f64> = sh.iter().map(|v| v * v).collect();

    let ks = Segments::new(&current.k, &sh, m, h);
    let ns = Segments::new(&current.n, &sh, m, h);
    let bs = Segments::new(&current.k, &sh2, m, h);

    // ∫_0^{x_p} C σ
    let c_sigma: Vec<f64> = (0..=m).map(|a| current.c[a] * sh[2 * a]).collect();
    let q = cumulative_trapezoid(&c_sigma, h);

    let rows: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..=m)
        .into_par_iter()
        .map(|i| {
            let base = tri(i, 0);
            let r = base..=tri(i, i);
            let (b1, b2, b3) = (&bs.a1[r.clone()], &bs.a2[r.clone()], &bs.a3[r]);
            let plus: Vec<f64> = (0..=i).map(|l| b1[l] + b2[l] + b3[l]).collect();
            let minus: Vec<f64> = (0..=i).map(|l| b1[l] + b2[l] - b3[l]).collect();
            // ∫_0^{t_j} of the row, so that ∫_t^x = total − prefix
            let cp = cumulative_trapezoid(&plus, h);
            let cm = cumulative_trapezoid(&minus, h);
            let mut kr = Vec::with_capacity(i + 1);
            let mut nr = Vec::with_capacity(i + 1);
            for j in 0..=i {
                let o = base + j;
                let qq = q[i - j];
                let rp = cp[i] - cp[j];
                let rm = cm[i] - cm[j];
                kr.push(
                    0.5 * (ks.a1[o] + ks.a2[o] + ks.a3[o]) - 0.5 * rm
                        + 0.5 * (ns.a1[o] - ns.a2[o] - ns.a3[o])
                        - qq,
                );
                nr.push(
                    0.5 * (-ks.a1[o] - ks.a2[o] + ks.a3[o]) + 0.5 * rp
                        + 0.5 * (-ns.a1[o] + ns.a2[o] - ns.a3[o])
                        + qq,
                );
            }
            (kr, nr, -0.5 * cp[i] - q[i])
        })
        .collect();

    let mut out = KernelTriple::zeros(grid);
    for (i, (kr, nr, c)) in rows.into_iter().enumerate() {
        out.k[tri(i, 0)..=tri(i, i)].copy_from_slice(&kr);
        out.n[tri(i, 0)..=tri(i, i)].copy_from_slice(&nr);
        out.c[i] = c;
    }
    out.iterations = current.iterations + 1;
    out.residual = out.sup_norm();
    out.history = current.history.clone();
    out.history.push(out.residual);
    Ok(out)
}

/// Sums the Picard series until the term norm drops below `tol`.
pub fn build_kernels(sigma: &PotentialSigma, tol: f64, max_iter: usize) -> Result<KernelTriple> {
    if !(tol > 0.0) {
        return Err(SlError::Invalid(format!("tol must be positive, got {tol}")));
    }
    let mut term = initial_kernels(sigma);
    let mut sum = term.clone();
    let initial = term.residual;
    for _ in 0..max_iter {
        term = picard_step(&term, sigma)?;
        sum.add_assign(&term);
        sum.iterations = term.iterations;
        sum.residual = term.residual;
        sum.history = term.history.clone();
        if !term.residual.is_finite() || term.residual > DIVERGENCE_FACTOR * initial.max(f64::MIN_POSITIVE) {
            return Err(SlError::Divergence {
                iterations: term.iterations,
                residual: term.residual,
            });
        }
        if term.residual < tol {
            return Ok(sum);
        }
    }
    Err(SlError::IterationBudget {
        max_iter,
        tol,
        residual: term.residual,
    })
}

/// `(φ(x, λ), φ^[1](x, λ))` from the kernels, trapezoid rule along the row of
/// the grid node nearest to `x`.
pub fn rep_phi(kernels: &KernelTriple, lambda: f64, x: f64) -> (f64, f64) {
    let grid = &kernels.grid;
    let h = grid.step();
    let i = ((x / h).round().max(0.0) as usize).min(grid.cells());
    let xi = grid.point(i);
    let pts = &grid.points()[..=i];
    let kc: Vec<f64> = kernels
        .k_row(i)
        .iter()
        .zip(pts)
        .map(|(k, &t)| k * lambda.cos_sinc(t).0)
        .collect();
    // ρ sin ρt = λ · sin ρt / ρ
    let ns: Vec<f64> = kernels
        .n_row(i)
        .iter()
        .zip(pts)
        .map(|(n, &t)| n * lambda * lambda.cos_sinc(t).1)
        .collect();
    let (c, s) = lambda.cos_sinc(xi);
    (c + trapezoid(&kc, h), -lambda * s + trapezoid(&ns, h) + kernels.c(i))
}

/// `Δ(λ) = −ρ sin ρπ + ρ ∫_0^π P(t) sin ρt dt + D`.
#[derive(Debug, Clone, PartialEq)]
pub struct PDRepresentation {
    pub grid: RealGrid,
    pub p: Vec<f64>,
    pub d: f64,
}

impl PDRepresentation {
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.p.iter().map(|v| v * v).collect();
        trapezoid(&sq, self.grid.step()).sqrt()
    }

    /// Evaluates the representation with `P` replaced by its piecewise-linear
    /// interpolant, integrated against `ρ sin ρt` exactly on each cell.
    pub fn characteristic(&self, lambda: f64) -> f64 {
        let h = self.grid.step();
        let cs: Vec<(f64, f64)> = self.grid.points().iter().map(|&t| lambda.cos_sinc(t)).collect();
        let mut integral = 0.0;
        for j in 0..self.grid.cells() {
            let (c0, s0) = cs[j];
            let (c1, s1) = cs[j + 1];
            // ∫ ρ sin ρt and ∫ ρ (t − t_j)/h sin ρt over the cell
            let i0 = c0 - c1;
            let i1 = -c1 + (s1 - s0) / h;
            integral += self.p[j] * i0 + (self.p[j + 1] - self.p[j]) * i1;
        }
        let s = cs[self.grid.cells()].1;
        -lambda * s + integral + self.d
    }
}

/// `P(t) = N(π, t) − H(1 + ∫_t^π K(π, s) ds)`,
/// `D = C(π) + H(1 + ∫_0^π K(π, s) ds)`.
pub fn delta_representation(kernels: &KernelTriple, h_right: f64) -> PDRepresentation {
    let grid = kernels.grid.clone();
    let m = grid.cells();
    let h = grid.step();
    let krow = kernels.k_row(m);
    let cum = cumulative_trapezoid(krow, h);
    let total = cum[m];
    let p = (0..=m)
        .map(|j| kernels.n(m, j) - h_right * (1.0 + total - cum[j]))
        .collect();
    PDRepresentation {
        d: kernels.c(m) + h_right * (1.0 + total),
        p,
        grid,
    }
}
