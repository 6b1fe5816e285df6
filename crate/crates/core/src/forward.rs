//! Direct problem: solutions of `ℓy = λy` in quasi-derivative form, the
//! characteristic function, eigenvalues, weight numbers and the Weyl
//! function.
//!
//! With `σ` constant on every cell the system
//!
//! ```text
//! u' =  σ u + v,
//! v' = −(λ + σ²) u − σ v,      u = y, v = y^[1] = y' − σ y,
//! ```
//!
//! has a traceless coefficient matrix `A` with `A² = −λ I`, so the cell
//! propagator is `exp(A h) = cos(√λ h) I + sin(√λ h)/√λ · A` exactly.

use crate::error::{Result, SlError};
use crate::grid::{l2_remainder_norm, RealGrid};
use crate::potential::PotentialSigma;
use crate::scalar::{principal_rho, Scalar};
use crate::spectral::{model_alpha, Source, SpectralDatum, SpectralSequence};
use std::f64::consts::PI;

/// Largest admissible `|Im √λ| · π` before the propagators overflow.
const GROWTH_LIMIT: f64 = 700.0;
/// Bracket width of the eigenvalue scan, in `ρ`.
pub const SCAN_STEP: f64 = 0.05;
/// Two eigenvalues closer than this in `ρ` are treated as a multiple root.
pub const MULTIPLICITY_TOL: f64 = 1e-6;
/// Maximum relative disagreement between the two weight-number formulas.
pub const WEIGHT_CROSS_CHECK_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// From `x = 0` towards `π`; initial data at `0`.
    Forward,
    /// From `x = π` towards `0`; initial data at `π`.
    Backward,
}

/// Samples of a solution `y` and its quasi-derivative `y^[1]` at the grid
/// nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTrace<T: Scalar = f64> {
    pub grid: RealGrid,
    pub lambda: T,
    pub y: Vec<T>,
    pub y1: Vec<T>,
}

/// `Δ(λ)` together with a central-difference `dΔ/dλ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicSample {
    pub lambda: f64,
    pub value: f64,
    pub dvalue: f64,
}

fn check_growth<T: Scalar>(lambda: T) -> Result<()> {
    if !lambda.is_finite() {
        return Err(SlError::Range(format!("lambda = {lambda:?} is not finite")));
    }
    let g = lambda.imag_sqrt_abs() * PI;
    if g > GROWTH_LIMIT {
        return Err(SlError::Range(format!(
            "|Im rho| * pi = {g:.1} exceeds the scaling limit {GROWTH_LIMIT}"
        )));
    }
    Ok(())
}

#[inline]
fn cell_step<T: Scalar>(c: T, lambda: T, cs: T, sn: T, u: T, v: T, backward: bool) -> (T, T) {
    let au = c * u + v;
    let av = -((lambda + c * c) * u) - c * v;
    if backward {
        (cs * u - sn * au, cs * v - sn * av)
    } else {
        (cs * u + sn * au, cs * v + sn * av)
    }
}

/// Integrates the quasi-derivative system cell by cell.
pub fn integrate_quasi_system<T: Scalar>(
    sigma: &PotentialSigma<T>,
    lambda: T,
    init_y: T,
    init_y1: T,
    direction: Direction,
) -> Result<SolutionTrace<T>> {
    check_growth(lambda)?;
    if !init_y.is_finite() || !init_y1.is_finite() {
        return Err(SlError::Invalid("initial values must be finite".into()));
    }
    let grid = sigma.grid().clone();
    let m = grid.cells();
    let (cs, sn) = lambda.cos_sinc(grid.step());
    let mut y = vec![T::zero(); m + 1];
    let mut y1 = vec![T::zero(); m + 1];
    match direction {
        Direction::Forward => {
            y[0] = init_y;
            y1[0] = init_y1;
            for j in 0..m {
                let (u, v) = cell_step(sigma.value(j), lambda, cs, sn, y[j], y1[j], false);
                y[j + 1] = u;
                y1[j + 1] = v;
            }
        }
        Direction::Backward => {
            y[m] = init_y;
            y1[m] = init_y1;
            for j in (0..m).rev() {
                let (u, v) = cell_step(sigma.value(j), lambda, cs, sn, y[j + 1], y1[j + 1], true);
                y[j] = u;
                y1[j] = v;
            }
        }
    }
    if y.iter().chain(&y1).any(|v| !v.is_finite()) {
        return Err(SlError::Range(format!("solution overflowed at lambda = {lambda:?}")));
    }
    Ok(SolutionTrace { grid, lambda, y, y1 })
}

/// Propagates `(y, y^[1])` across the whole interval without storing the
/// trace.
fn sweep<T: Scalar>(sigma: &PotentialSigma<T>, lambda: T, u0: T, v0: T, backward: bool) -> (T, T) {
    let (cs, sn) = lambda.cos_sinc(sigma.grid().step());
    let (mut u, mut v) = (u0, v0);
    let m = sigma.grid().cells();
    if backward {
        for j in (0..m).rev() {
            (u, v) = cell_step(sigma.value(j), lambda, cs, sn, u, v, true);
        }
    } else {
        for j in 0..m {
            (u, v) = cell_step(sigma.value(j), lambda, cs, sn, u, v, false);
        }
    }
    (u, v)
}

/// Value of the solution with data `(u0, v0)` at `x = 0` evaluated at an
/// arbitrary `x ∈ [0, π]`.
pub fn solve_at<T: Scalar>(sigma: &PotentialSigma<T>, lambda: T, u0: T, v0: T, x: f64) -> Result<(T, T)> {
    check_growth(lambda)?;
    let grid = sigma.grid();
    let h = grid.step();
    let x = x.clamp(0.0, PI);
    let (cs, sn) = lambda.cos_sinc(h);
    let (mut u, mut v) = (u0, v0);
    let full = ((x / h).floor() as usize).min(grid.cells());
    for j in 0..full {
        (u, v) = cell_step(sigma.value(j), lambda, cs, sn, u, v, false);
    }
    let rest = x - full as f64 * h;
    if rest > 0.0 && full < grid.cells() {
        let (c2, s2) = lambda.cos_sinc(rest);
        (u, v) = cell_step(sigma.value(full), lambda, c2, s2, u, v, false);
    }
    Ok((u, v))
}

/// `(φ(π, λ), φ^[1](π, λ))`.
pub fn phi_at_pi(sigma: &PotentialSigma, lambda: f64) -> Result<(f64, f64)> {
    check_growth(lambda)?;
    Ok(sweep(sigma, lambda, 1.0, 0.0, false))
}

/// `(Ψ(0, λ), Ψ^[1](0, λ))` with `Ψ(π) = 1`, `Ψ^[1](π) = −H`.
pub fn psi_at_zero(sigma: &PotentialSigma, h_right: f64, lambda: f64) -> Result<(f64, f64)> {
    check_growth(lambda)?;
    Ok(sweep(sigma, lambda, 1.0, -h_right, true))
}

fn delta_value(sigma: &PotentialSigma, h_right: f64, lambda: f64) -> Result<f64> {
    let (u, v) = phi_at_pi(sigma, lambda)?;
    let d = v + h_right * u;
    if !d.is_finite() {
        return Err(SlError::Range(format!("Delta overflowed at lambda = {lambda}")));
    }
    Ok(d)
}

/// `Δ(λ) = φ^[1](π, λ) + H φ(π, λ)`.
pub fn characteristic(sigma: &PotentialSigma, h_right: f64, lambda: f64) -> Result<CharacteristicSample> {
    let value = delta_value(sigma, h_right, lambda)?;
    let step = 1e-6 * lambda.abs().max(1.0);
    let plus = delta_value(sigma, h_right, lambda + step)?;
    let minus = delta_value(sigma, h_right, lambda - step)?;
    Ok(CharacteristicSample {
        lambda,
        value,
        dvalue: (plus - minus) / (2.0 * step),
    })
}

/// `λ` as a function of the signed scan variable: `t²` for `t ≥ 0`,
/// `−t²` otherwise.
#[inline]
fn lambda_of(t: f64) -> f64 {
    if t >= 0.0 {
        t * t
    } else {
        -t * t
    }
}

/// Sign-change scan of `f` over `[t_lo, t_hi]` with `0` as a node, refined
/// by bisection. Returns the roots in the scan variable.
pub(crate) fn scan_roots(
    f: &dyn Fn(f64) -> Result<f64>,
    t_lo: f64,
    t_hi: f64,
    step: f64,
) -> Result<Vec<f64>> {
    let mut nodes = Vec::new();
    if t_lo < 0.0 {
        let k = (-t_lo / step).ceil() as usize;
        for i in (1..=k).rev() {
            nodes.push(-(i as f64) * (-t_lo) / k as f64);
        }
    }
    let k = (t_hi / step).ceil().max(1.0) as usize;
    for i in 0..=k {
        nodes.push(i as f64 * t_hi / k as f64);
    }
    let values = nodes.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
    let mut roots = Vec::new();
    for i in 0..nodes.len() {
        if values[i] == 0.0 {
            roots.push(nodes[i]);
            continue;
        }
        if i == 0 || values[i - 1] == 0.0 {
            continue;
        }
        if values[i - 1].signum() != values[i].signum() {
            roots.push(bisect(f, nodes[i - 1], nodes[i], values[i - 1])?);
        }
    }
    Ok(roots)
}

fn bisect(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= 1e-14 * mid.abs().max(1.0) || mid == a || mid == b {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Lower edge `Λ₀ = (1 + ‖σ‖)²` of the negative-eigenvalue window.
pub fn negative_window(sigma: &PotentialSigma) -> f64 {
    (1.0 + sigma.l2_norm()).powi(2)
}

/// The first `count` eigenvalues of `L(σ, H)` for real `σ`, `H`.
pub fn eigenvalues(sigma: &PotentialSigma, h_right: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(SlError::Invalid("count must be at least 1".into()));
    }
    let window = negative_window(sigma);
    let t_lo = -window.sqrt();
    let f = |t: f64| delta_value(sigma, h_right, lambda_of(t));
    if f(t_lo)? <= 0.0 {
        return Err(SlError::SearchWindow(format!(
            "Delta(-{window:.3}) <= 0: an eigenvalue lies below the negative window"
        )));
    }
    let t_hi = count as f64 - 0.25;
    let roots = scan_roots(&f, t_lo, t_hi, SCAN_STEP)?;
    if roots.len() < count {
        return Err(SlError::SearchWindow(format!(
            "found {} of {count} eigenvalues in rho in [{t_lo:.3}, {t_hi}]",
            roots.len()
        )));
    }
    for w in roots[..count].windows(2) {
        if (w[1] - w[0]).abs() < MULTIPLICITY_TOL {
            return Err(SlError::Multiplicity(format!(
                "roots at rho = {} and {} are closer than {MULTIPLICITY_TOL:e}",
                w[0], w[1]
            )));
        }
    }
    Ok(roots[..count].iter().map(|&t| lambda_of(t)).collect())
}

/// `∫_0^h (a cos ρs + b sin ρs / ρ)² ds` in closed form.
fn cell_square_integral(a: f64, b: f64, lambda: f64, h: f64) -> f64 {
    let (c, s) = lambda.cos_sinc(h);
    let cc = 0.5 * (h + c * s);
    let cs = 0.5 * s * s;
    let z = lambda * h * h;
    let ss = if z.abs() < 1e-2 {
        // (h − c s)/(2λ) = Σ_{k≥1} (−1)^{k+1} 4^k λ^{k−1} h^{2k+1} / (2 (2k+1)!)
        let mut term = h * h * h / 3.0;
        let mut sum = term;
        for k in 1..10 {
            let kf = k as f64;
            term *= -4.0 * z / ((2.0 * kf + 2.0) * (2.0 * kf + 3.0));
            sum += term;
        }
        sum
    } else {
        (h - c * s) / (2.0 * lambda)
    };
    a * a * cc + 2.0 * a * b * cs + b * b * ss
}

/// `∫_0^π φ²(x, λ) dx`, exact for the piecewise-constant potential.
pub fn phi_square_norm(sigma: &PotentialSigma, lambda: f64) -> Result<f64> {
    let trace = integrate_quasi_system(sigma, lambda, 1.0, 0.0, Direction::Forward)?;
    let h = sigma.grid().step();
    Ok((0..sigma.grid().cells())
        .map(|j| {
            let a = trace.y[j];
            let b = sigma.value(j) * a + trace.y1[j];
            cell_square_integral(a, b, lambda, h)
        })
        .sum())
}

/// Weight numbers by both formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightNumbers {
    pub data: SpectralSequence,
    /// `−Ψ(0, λ_n) / Δ'(λ_n)`.
    pub residue_alphas: Vec<f64>,
    /// `|α_n − α_n^res| / |α_n|`.
    pub discrepancies: Vec<f64>,
}

/// `α_n = (∫ φ²(x, λ_n) dx)^{-1}`, cross-checked against the residue form.
pub fn weight_numbers(sigma: &PotentialSigma, h_right: f64, lambdas: &[f64]) -> Result<WeightNumbers> {
    let mut data = Vec::with_capacity(lambdas.len());
    let mut residue_alphas = Vec::with_capacity(lambdas.len());
    let mut discrepancies = Vec::with_capacity(lambdas.len());
    for (n, &lambda) in lambdas.iter().enumerate() {
        let alpha = 1.0 / phi_square_norm(sigma, lambda)?;
        let (psi0, _) = psi_at_zero(sigma, h_right, lambda)?;
        let dd = characteristic(sigma, h_right, lambda)?.dvalue;
        let alpha_res = -psi0 / dd;
        let disc = (alpha - alpha_res).abs() / alpha.abs();
        if !(disc <= WEIGHT_CROSS_CHECK_TOL) {
            return Err(SlError::CrossCheck(format!(
                "n = {n}, lambda = {lambda}: alpha = {alpha}, residue form {alpha_res} (rel {disc:e})"
            )));
        }
        data.push(SpectralDatum::new(lambda, alpha, Source::Measured)?);
        residue_alphas.push(alpha_res);
        discrepancies.push(disc);
    }
    Ok(WeightNumbers {
        data: SpectralSequence::new(data),
        residue_alphas,
        discrepancies,
    })
}

/// Eigenvalues plus weight numbers, `n = 0..=n_max`.
pub fn spectral_data(sigma: &PotentialSigma, h_right: f64, n_max: usize) -> Result<SpectralSequence> {
    let lambdas = eigenvalues(sigma, h_right, n_max + 1)?;
    Ok(weight_numbers(sigma, h_right, &lambdas)?.data)
}

fn pole_guard(sigma: &PotentialSigma, h_right: f64, lambda: f64) -> Result<CharacteristicSample> {
    let ch = characteristic(sigma, h_right, lambda)?;
    let distance = if ch.dvalue != 0.0 {
        (ch.value / ch.dvalue).abs()
    } else {
        f64::INFINITY
    };
    if distance < 1e-8 || ch.value == 0.0 {
        return Err(SlError::PoleProximity { lambda, distance });
    }
    Ok(ch)
}

/// Weyl function `M(λ) = −Ψ(0, λ)/Δ(λ)`.
pub fn weyl_value(sigma: &PotentialSigma, h_right: f64, lambda: f64) -> Result<f64> {
    let ch = pole_guard(sigma, h_right, lambda)?;
    let (psi0, _) = psi_at_zero(sigma, h_right, lambda)?;
    Ok(-psi0 / ch.value)
}

/// Weyl function of the model problem, `cos ρπ / (ρ sin ρπ)`.
pub fn model_weyl(lambda: f64) -> f64 {
    let (c, s) = lambda.cos_sinc(PI);
    c / (lambda * s)
}

/// Partial pole expansion `Σ_{n≤N} α_n/(λ−λ_n)`, optionally with the
/// model tail `Σ_{n>N} α̃_n/(λ−n²)` added in closed form.
pub fn weyl_series(data: &SpectralSequence, lambda: f64, model_tail: bool) -> f64 {
    let mut sum: f64 = data.data().iter().map(|d| d.alpha / (lambda - d.lambda)).sum();
    if model_tail {
        let head: f64 = (0..data.len())
            .map(|n| model_alpha(n) / (lambda - (n * n) as f64))
            .sum();
        sum += model_weyl(lambda) - head;
    }
    sum
}

/// `⟨φ, Φ⟩(x) = φ Φ^[1] − φ^[1] Φ` with `Φ = S + M φ`.
pub fn wronskian_check(sigma: &PotentialSigma, h_right: f64, lambda: f64, x: f64) -> Result<f64> {
    let m = weyl_value(sigma, h_right, lambda)?;
    let (p, p1) = solve_at(sigma, lambda, 1.0, 0.0, x)?;
    let (s, s1) = solve_at(sigma, lambda, 0.0, 1.0, x)?;
    let (f, f1) = (s + m * p, s1 + m * p1);
    Ok(p * f1 - p1 * f)
}

/// `ρ_n − n` and `α_n − 2/π` with their norms.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticRemainders {
    /// `Re ρ_n − n` for `λ_n ≥ 0`, `|ρ_n − n|` for negative eigenvalues.
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    pub rho_norm: f64,
    pub alpha_norm: f64,
    /// Share of `Σ r_n²` contributed by the upper half of the indices.
    pub rho_tail_fraction: f64,
    pub alpha_tail_fraction: f64,
}

pub fn asymptotic_remainders(data: &SpectralSequence) -> AsymptoticRemainders {
    let rho: Vec<f64> = data
        .data()
        .iter()
        .enumerate()
        .map(|(n, d)| {
            if d.lambda >= 0.0 {
                d.rho.re - n as f64
            } else {
                (d.rho - n as f64).norm()
            }
        })
        .collect();
    let alpha: Vec<f64> = data.data().iter().map(|d| d.alpha - 2.0 / PI).collect();
    AsymptoticRemainders {
        rho_norm: l2_remainder_norm(&rho),
        alpha_norm: l2_remainder_norm(&alpha),
        rho_tail_fraction: tail_fraction(&rho),
        alpha_tail_fraction: tail_fraction(&alpha),
        rho,
        alpha,
    }
}

/// Squared sums below this are rounding noise and count as zero.
const NOISE_FLOOR: f64 = 1e-20;

/// `Σ_{n > N/2} r_n² / Σ_n r_n²`, zero for a sequence at rounding level.
pub fn tail_fraction(seq: &[f64]) -> f64 {
    let total: f64 = seq.iter().map(|r| r * r).sum();
    if total <= NOISE_FLOOR {
        return 0.0;
    }
    let half = (seq.len().saturating_sub(1)) / 2;
    let tail: f64 = seq.iter().skip(half + 1).map(|r| r * r).sum();
    tail / total
}

/// Smallest `n₀` with `ρ_n ∈ (n − ½, n + ½)` for every `n ≥ n₀` in the data.
pub fn interlacing_start(data: &SpectralSequence) -> Option<usize> {
    let ok = |n: usize, d: &SpectralDatum| {
        d.lambda >= 0.0 && (d.rho.re - n as f64).abs() < 0.5
    };
    let mut start = None;
    for (n, d) in data.data().iter().enumerate().rev() {
        if ok(n, d) {
            start = Some(n);
        } else {
            break;
        }
    }
    start
}

/// `√λ` helper re-export for callers that only hold an eigenvalue.
pub fn rho_of(lambda: f64) -> num_complex::Complex64 {
    principal_rho(lambda)
}
