//! `slspec`: batch front end for the forward, inverse and stability tools.

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use slspec::forward::{asymptotic_remainders, eigenvalues, weight_numbers};
use slspec::inverse::{inverse, validate_data, ValidationMode, CONSISTENCY_TOL, PIVOT_TOL};
use slspec::io::{format_num, load_sigma, save_sigma, save_table, save_text_table};
use slspec::kernels::{build_kernels, delta_representation, DEFAULT_MAX_ITER, DEFAULT_TOL};
use slspec::stability::{
    coefficient_stability_experiment, conservation_threshold, perturbation_experiment, MATCH_RADIUS,
};
use slspec::{sigma_l2_distance, PotentialSigma, RealGrid, SlError, SpectralSequence};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const DEFAULT_N: usize = 40;
const DEFAULT_GRID: usize = 200;
const COEFFICIENT_SIZES: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

#[derive(Parser)]
#[command(name = "slspec", version, about = "Spectral toolkit for Sturm-Liouville operators with distributional potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues and weight numbers of a potential.
    Forward(ForwardArgs),
    /// Reconstruct sigma and H from spectral data.
    Inverse(InverseArgs),
    /// Forward then inverse, with an N-doubling error table.
    Roundtrip(ForwardArgs),
    /// Transformation kernels and the P/D representation.
    Kernels(KernelArgs),
    /// Zero-perturbation and coefficient-stability experiments.
    Stability(StabilityArgs),
    /// Check the solvability conditions of a data set.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    /// Resample to this many cells (default: the file's grid, or 200).
    #[arg(long = "grid")]
    grid: Option<usize>,
    #[arg(long, default_value = "slspec-out")]
    out: PathBuf,
}

#[derive(Args)]
struct ForwardArgs {
    #[arg(long)]
    sigma: PathBuf,
    #[arg(long = "H", default_value_t = 0.0, allow_negative_numbers = true)]
    h: f64,
    #[arg(long = "N", default_value_t = DEFAULT_N)]
    n: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct InverseArgs {
    #[arg(long)]
    data: PathBuf,
    /// Defaults to 40, or fewer if the file holds fewer data.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Reconstruct even if validation fails.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long)]
    sigma: PathBuf,
    #[arg(long = "H", default_value_t = 0.0, allow_negative_numbers = true)]
    h: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct StabilityArgs {
    /// Base potential; the zero potential if omitted.
    #[arg(long)]
    sigma: Option<PathBuf>,
    #[arg(long = "H", default_value_t = 0.0, allow_negative_numbers = true)]
    h: f64,
    /// Number of zeros compared.
    #[arg(long = "N", default_value_t = DEFAULT_N)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 1e-3, 1e-4])]
    delta: Vec<f64>,
    #[arg(long, default_value_t = 20240611)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    data: PathBuf,
    /// Also write validation.json here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure carrying an exit code and a machine-readable kind.
struct Failure {
    kind: &'static str,
    message: String,
    extra: Value,
}

impl From<SlError> for Failure {
    fn from(e: SlError) -> Self {
        let extra = match &e {
            SlError::Solvability { x, pivot } => json!({ "x": x, "pivot": pivot }),
            _ => Value::Null,
        };
        Failure {
            kind: e.kind(),
            message: e.to_string(),
            extra,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        SlError::Io(e).into()
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self.kind {
            "io" => 2,
            "validation" => 3,
            "solvability" => 4,
            _ => 5,
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Forward(a) => run_forward(&a),
        Command::Inverse(a) => run_inverse(&a),
        Command::Roundtrip(a) => run_roundtrip(&a),
        Command::Kernels(a) => run_kernels(&a),
        Command::Stability(a) => run_stability(&a),
        Command::Validate(a) => run_validate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let mut err = json!({ "kind": f.kind, "message": f.message });
            if let Value::Object(extra) = &f.extra {
                for (k, v) in extra {
                    err[k] = v.clone();
                }
            }
            eprintln!("{}", json!({ "error": err }));
            ExitCode::from(f.code())
        }
    }
}

fn tolerances() -> Value {
    json!({
        "kernel_tol": DEFAULT_TOL,
        "kernel_max_iter": DEFAULT_MAX_ITER,
        "pivot_tol": PIVOT_TOL,
        "consistency_tol": CONSISTENCY_TOL,
        "match_radius": MATCH_RADIUS,
    })
}

fn config(command: &str, n: usize, m: usize, extra: Value) -> Value {
    let mut c = json!({
        "command": command,
        "N": n,
        "grid": m,
        "defaults": { "N": DEFAULT_N, "grid": DEFAULT_GRID },
        "tolerances": tolerances(),
    });
    if let Value::Object(extra) = extra {
        for (k, v) in extra {
            c[k] = v;
        }
    }
    c
}

fn write_json(path: &Path, v: &Value) -> Outcome {
    let text = serde_json::to_string_pretty(v).map_err(|e| SlError::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn prepare_out(dir: &Path) -> Outcome {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Loads a potential and, if asked, resamples it onto an `m`-cell grid.
fn load_potential(path: &Path, m: Option<usize>) -> Result<PotentialSigma, Failure> {
    let s = load_sigma(path)?;
    match m {
        Some(m) if m != s.grid().cells() => {
            let g = RealGrid::new(m)?;
            let src = s.clone();
            Ok(PotentialSigma::from_fn(g, move |x| src.value(src.grid().cell_of(x))))
        }
        _ => Ok(s),
    }
}

fn load_data(path: &Path) -> Result<SpectralSequence, Failure> {
    let text = fs::read_to_string(path)?;
    Ok(SpectralSequence::from_json(&text)?)
}

fn run_forward(a: &ForwardArgs) -> Outcome {
    let sigma = load_potential(&a.sigma, a.common.grid)?;
    prepare_out(&a.common.out)?;
    let lambdas = eigenvalues(&sigma, a.h, a.n + 1)?;
    let w = weight_numbers(&sigma, a.h, &lambdas)?;
    let rem = asymptotic_remainders(&w.data);
    fs::write(a.common.out.join("spectral_data.json"), w.data.to_json()? + "\n")?;
    let rows: Vec<Vec<String>> = (0..rem.rho.len())
        .map(|n| vec![n.to_string(), format_num(rem.rho[n]), format_num(rem.alpha[n])])
        .collect();
    save_text_table(&a.common.out.join("remainders.csv"), &["n", "rho_remainder", "alpha_remainder"], &rows)?;
    let max_disc = w.discrepancies.iter().cloned().fold(0.0, f64::max);
    write_json(
        &a.common.out.join("report.json"),
        &json!({
            "H": a.h,
            "count": lambdas.len(),
            "checks": {
                "weight_cross_check_max": max_disc,
                "rho_remainder_norm": rem.rho_norm,
                "alpha_remainder_norm": rem.alpha_norm,
                "rho_tail_fraction": rem.rho_tail_fraction,
                "alpha_tail_fraction": rem.alpha_tail_fraction,
            },
            "config": config("forward", a.n, sigma.grid().cells(), json!({ "H": a.h })),
        }),
    )
}

fn run_inverse(a: &InverseArgs) -> Outcome {
    let data = load_data(&a.data)?;
    if data.is_empty() {
        return Err(SlError::Validation("data file holds no entries".into()).into());
    }
    let n = a.n.unwrap_or(DEFAULT_N.min(data.len() - 1));
    let m = a.common.grid.unwrap_or(DEFAULT_GRID);
    let grid = RealGrid::new(m)?;
    prepare_out(&a.common.out)?;
    let report = validate_data(&data, ValidationMode::SelfAdjoint);
    let report_json = serde_json::to_value(&report).map_err(|e| SlError::Parse(e.to_string()))?;
    let cfg = config("inverse", n, m, json!({ "force": a.force }));
    if !report.passed() && !a.force {
        write_json(
            &a.common.out.join("report.json"),
            &json!({ "checks": { "validation": report_json }, "config": cfg }),
        )?;
        return Err(SlError::Validation(report.messages.join("; ")).into());
    }
    let r = inverse(&data, n, &grid)?;
    save_sigma(&r.sigma, &a.common.out.join("sigma.csv"))?;
    write_json(
        &a.common.out.join("report.json"),
        &json!({
            "H": r.h,
            "cond_max": r.cond_max,
            "checks": {
                "validation": report_json,
                "consistency_l2": r.consistency,
                "h_consistency": r.h_consistency,
                "tail_bound": r.tail_bound,
            },
            "config": cfg,
        }),
    )
}

/// `N, N/2, N/4, …` down to 5, in increasing order.
fn doubling_sizes(n: usize) -> Vec<usize> {
    let mut out = vec![n];
    let mut k = n / 2;
    while k >= 5 {
        out.push(k);
        k /= 2;
    }
    out.reverse();
    out
}

fn run_roundtrip(a: &ForwardArgs) -> Outcome {
    let sigma = load_potential(&a.sigma, a.common.grid)?;
    let grid = sigma.grid().clone();
    prepare_out(&a.common.out)?;
    let lambdas = eigenvalues(&sigma, a.h, a.n + 1)?;
    let data = weight_numbers(&sigma, a.h, &lambdas)?.data;
    let mut rows = Vec::new();
    let mut last = None;
    for k in doubling_sizes(a.n) {
        let r = inverse(&data, k, &grid)?;
        let l2 = sigma_l2_distance(&r.sigma, &sigma)?;
        rows.push(vec![
            k.to_string(),
            format_num(l2),
            format_num((r.h - a.h).abs()),
            format_num(r.cond_max),
        ]);
        last = Some((r, l2));
    }
    let (r, l2) = last.expect("at least one size");
    save_sigma(&sigma, &a.common.out.join("sigma_true.csv"))?;
    save_sigma(&r.sigma, &a.common.out.join("sigma_rec.csv"))?;
    save_text_table(&a.common.out.join("n_doubling.csv"), &["N", "l2_error", "h_error", "cond_max"], &rows)?;
    write_json(
        &a.common.out.join("roundtrip.json"),
        &json!({
            "H": a.h,
            "H_rec": r.h,
            "l2_error": l2,
            "h_error": (r.h - a.h).abs(),
            "cond_max": r.cond_max,
            "checks": { "consistency_l2": r.consistency, "h_consistency": r.h_consistency },
            "config": config("roundtrip", a.n, grid.cells(), json!({ "H": a.h })),
        }),
    )
}

fn run_kernels(a: &KernelArgs) -> Outcome {
    let sigma = load_potential(&a.sigma, a.common.grid)?;
    prepare_out(&a.common.out)?;
    let k = build_kernels(&sigma, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    k.write_csv(std::io::BufWriter::new(fs::File::create(a.common.out.join("kernels.csv"))?))?;
    k.write_c_csv(std::io::BufWriter::new(fs::File::create(a.common.out.join("kernels_c.csv"))?))?;
    let pd = delta_representation(&k, a.h);
    let rows: Vec<Vec<f64>> = pd.grid.points().iter().zip(&pd.p).map(|(t, p)| vec![*t, *p]).collect();
    save_table(&a.common.out.join("pd.csv"), &["t", "P"], &rows)?;
    write_json(
        &a.common.out.join("report.json"),
        &json!({
            "H": a.h,
            "D": pd.d,
            "P_l2": pd.l2_norm(),
            "iterations": k.iterations,
            "residual": k.residual,
            "term_norms": k.history,
            "config": config("kernels", 0, sigma.grid().cells(), json!({ "H": a.h })),
        }),
    )
}

fn run_stability(a: &StabilityArgs) -> Outcome {
    let sigma = match &a.sigma {
        Some(p) => load_potential(p, a.common.grid)?,
        None => PotentialSigma::zero(RealGrid::new(a.common.grid.unwrap_or(DEFAULT_GRID))?),
    };
    prepare_out(&a.common.out)?;
    let k = build_kernels(&sigma, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let pd = delta_representation(&k, a.h);
    let mut rows = Vec::new();
    let mut experiments = Vec::new();
    for &delta in &a.delta {
        let e = perturbation_experiment(&pd, a.trials, delta, a.n, a.seed)?;
        for r in &e.reports {
            rows.push(vec![
                r.trial.to_string(),
                format_num(r.delta),
                format_num(r.lhs),
                format_num(r.rhs),
                format_num(r.ratio),
            ]);
        }
        experiments.push(e);
    }
    save_text_table(&a.common.out.join("perturbation.csv"), &["trial", "delta", "lhs", "rhs", "ratio"], &rows)?;
    let coeff = coefficient_stability_experiment(&sigma, a.h, &COEFFICIENT_SIZES, a.n)?;
    let crow: Vec<Vec<f64>> = coeff.iter().map(|r| vec![r.s, r.d]).collect();
    save_table(&a.common.out.join("coefficient_stability.csv"), &["s", "d"], &crow)?;
    let summary: Vec<Value> = experiments
        .iter()
        .map(|e| json!({ "delta": e.delta, "max_ratio": e.max_ratio, "conserved": e.conserved }))
        .collect();
    write_json(
        &a.common.out.join("stability.json"),
        &json!({
            "seed": a.seed,
            "trials": a.trials,
            "delta": a.delta,
            "count": a.n,
            "H": a.h,
            "experiments": summary,
            "conservation_threshold": conservation_threshold(&experiments),
            "coefficient_sizes": COEFFICIENT_SIZES,
            "config": config("stability", a.n, sigma.grid().cells(), Value::Null),
        }),
    )
}

fn run_validate(a: &ValidateArgs) -> Outcome {
    let data = load_data(&a.data)?;
    let report = validate_data(&data, ValidationMode::SelfAdjoint);
    let v = serde_json::to_value(&report).map_err(|e| SlError::Parse(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&v).map_err(|e| SlError::Parse(e.to_string()))?);
    if let Some(dir) = &a.out {
        prepare_out(dir)?;
        write_json(&dir.join("validation.json"), &v)?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(SlError::Validation(report.messages.join("; ")).into())
    }
}
