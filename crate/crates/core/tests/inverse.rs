use num_complex::Complex64;
use proptest::prelude::*;
use slspec::forward::spectral_data;
use slspec::inverse::*;
use slspec::spectral::model_spectral_data;
use slspec::{sigma_l2_distance, PotentialSigma, RealGrid, Source, SpectralDatum, SpectralSequence};
use std::f64::consts::PI;

fn grid() -> RealGrid {
    RealGrid::new(200).unwrap()
}

fn sine_data(n: usize) -> (PotentialSigma, SpectralSequence) {
    let s = PotentialSigma::from_fn(grid(), |x| 0.3 * x.sin());
    let d = spectral_data(&s, 0.2, n).unwrap();
    (s, d)
}

#[test]
fn model_data_is_a_fixed_point() {
    let r = inverse(&model_spectral_data(30), 30, &grid()).unwrap();
    assert!(r.sigma.values().iter().all(|v| v.abs() < 1e-10));
    assert!(r.h.abs() < 1e-10);
    for node in [0, 77, 200] {
        let x = grid().point(node);
        for n in 0..=30 {
            assert!((r.phi.phi(node, n, 0) - (n as f64 * x).cos()).abs() < 1e-10);
        }
    }
}

#[test]
fn complete_data_examples() {
    let model = complete_data(&model_spectral_data(10), 10).unwrap();
    assert!(model.xi.iter().all(|&x| x == 0.0));
    assert!(model.collapsed.iter().all(|&c| c));

    let mut v = model_spectral_data(10).data().to_vec();
    v[0] = SpectralDatum::new(0.1, 1.0 / PI, Source::Measured).unwrap();
    let shifted = complete_data(&SpectralSequence::new(v), 10).unwrap();
    assert!((shifted.xi[0] - 0.1f64.sqrt()).abs() < 1e-14);
    assert!(shifted.xi[1..].iter().all(|&x| x == 0.0));

    let s = PotentialSigma::constant(grid(), 0.5);
    let d = complete_data(&spectral_data(&s, 0.0, 20).unwrap(), 20).unwrap();
    assert!(d.xi.iter().all(|&x| x > 0.0));
    assert!(d.xi.iter().map(|x| x * x).sum::<f64>().is_finite());
}

#[test]
fn too_few_data_is_rejected() {
    assert!(complete_data(&model_spectral_data(3), 5).is_err());
}

#[test]
fn solved_phi_satisfies_initial_condition_and_continuity() {
    let s = PotentialSigma::constant(grid(), 0.5);
    let data = complete_data(&spectral_data(&s, 0.0, 20).unwrap(), 20).unwrap();
    let table = solve_main_equation(&grid(), &data).unwrap();
    let h = grid().step();
    for n in 0..=20 {
        for i in 0..2 {
            assert!((table.phi(0, n, i) - 1.0).abs() < 1e-8, "phi_{n}{i}(0)");
            let jump = (0..200)
                .map(|k| (table.phi(k + 1, n, i) - table.phi(k, n, i)).abs())
                .fold(0.0, f64::max);
            assert!(jump <= 3.0 * h * (n as f64 + 1.0), "n={n}, i={i}: {jump}");
        }
    }
}

#[test]
fn weighted_and_raw_systems_agree() {
    let (_, d) = sine_data(20);
    let data = complete_data(&d, 20).unwrap();
    assert!(data.xi.iter().all(|&x| x > 0.0));
    let table = solve_main_equation(&grid(), &data).unwrap();
    for node in [0, 40, 100, 163, 200] {
        let x = grid().point(node);
        let (raw, cond) = solve_raw_system(x, &data).unwrap();
        if cond >= 1e8 {
            continue;
        }
        for (n, v) in raw.iter().enumerate() {
            for i in 0..2 {
                assert!((v[i] - table.phi(node, n, i)).abs() < 1e-6, "x={x}, n={n}, i={i}");
            }
        }
    }
}

#[test]
fn perturbation_norm_scales_with_data_gap() {
    // ‖R̃(x)‖ ≤ C (Σ ξ²)^{1/2} with one C across x and data sets
    let mut ratios = Vec::new();
    for c in [0.05, 0.1, 0.2, 0.4] {
        let s = PotentialSigma::from_fn(grid(), |x| c * (1.0 + x.cos()));
        let data = complete_data(&spectral_data(&s, c, 20).unwrap(), 20).unwrap();
        let gap = data.xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in [0.5, 1.5, 2.5, PI] {
            let sys = build_main_system(x, &data).unwrap();
            ratios.push(sys.perturbation_norm() / gap);
        }
    }
    let c_fit = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(c_fit.is_finite());
    // a single constant fits: the spread stays within one order of magnitude
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(c_fit / lo < 10.0, "{ratios:?}");
}

#[test]
fn model_system_is_identity() {
    let data = complete_data(&model_spectral_data(6), 6).unwrap();
    let sys = build_main_system(1.3, &data).unwrap();
    let n = sys.matrix.nrows();
    for i in 0..n {
        for j in 0..n {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((sys.matrix[(i, j)] - e).abs() < 1e-14);
        }
    }
    for k in 0..=6 {
        assert!((sys.rhs[k] - (k as f64 * 1.3).cos()).abs() < 1e-14);
        assert_eq!(sys.rhs[7 + k], 0.0);
    }
}

#[test]
fn round_trip_contracts_with_n() {
    let cases: Vec<(PotentialSigma, f64)> = vec![
        (PotentialSigma::constant(grid(), 0.5), 0.0),
        (PotentialSigma::from_fn(grid(), |x| 0.3 * x.sin()), 0.2),
    ];
    for (s, h) in cases {
        let errs: Vec<(f64, f64)> = [20, 40]
            .iter()
            .map(|&n| {
                let r = inverse(&spectral_data(&s, h, n).unwrap(), n, &grid()).unwrap();
                (sigma_l2_distance(&r.sigma, &s).unwrap(), (r.h - h).abs())
            })
            .collect();
        assert!(errs[1].0 <= errs[0].0, "{errs:?}");
        assert!(errs[1].0 <= 0.05 && errs[1].1 <= 0.05, "{errs:?}");
    }
}

#[test]
fn validation_examples() {
    let model = model_spectral_data(40);
    assert!(validate_data(&model, ValidationMode::SelfAdjoint).passed());

    let mut v = model.data().to_vec();
    v[3] = SpectralDatum::raw(9.0, 0.0, Source::Measured);
    let r = validate_data(&SpectralSequence::new(v.clone()), ValidationMode::SelfAdjoint);
    assert!(!r.condition_i && r.messages.iter().any(|m| m.contains("condition (i)")));
    assert!(!validate_data(&SpectralSequence::new(v), ValidationMode::General).condition_i);

    let grown: Vec<SpectralDatum> = (0..=40)
        .map(|n| {
            let l = (n * n + n) as f64;
            SpectralDatum::new(l, slspec::spectral::model_alpha(n), Source::Measured).unwrap()
        })
        .collect();
    let r = validate_data(&SpectralSequence::new(grown), ValidationMode::SelfAdjoint);
    assert!(r.condition_i && !r.condition_ii);

    let (_, d) = sine_data(40);
    assert!(validate_data(&d, ValidationMode::SelfAdjoint).passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dtilde_symmetric_and_matches_quadrature(x in 0.0f64..PI, l in -4.0f64..60.0, m in -4.0f64..60.0) {
        let a = dtilde(x, l, m);
        prop_assert!((a - dtilde(x, m, l)).abs() < 1e-12 * a.abs().max(1.0));
        let n = 4000;
        let h = x / n as f64;
        let f = |t: f64| {
            let c = |lam: f64| if lam >= 0.0 { (lam.sqrt() * t).cos() } else { ((-lam).sqrt() * t).cosh() };
            c(l) * c(m)
        };
        let quad = h * ((1..n).map(|k| f(k as f64 * h)).sum::<f64>() + 0.5 * (f(0.0) + f(x)));
        prop_assert!((a - quad).abs() < 1e-4 * quad.abs().max(1.0), "{a} vs {quad}");
    }

    #[test]
    fn cos_difference_matches_direct(r0 in 0.0f64..40.0, gap in 1e-3f64..2.0, x in 0.0f64..PI) {
        let r1 = r0 + gap;
        let got = cos_difference(Complex64::new(r0, 0.0), Complex64::new(r1, 0.0), x);
        let direct = (r0 * x).cos() - (r1 * x).cos();
        prop_assert!((got - direct).abs() < 1e-10);
    }

    #[test]
    fn cos_difference_tiny_gap_is_relatively_accurate(r0 in 0.5f64..40.0, e in 1e-12f64..1e-4, x in 0.1f64..PI) {
        let r1 = r0 + e;
        let got = cos_difference(Complex64::new(r0, 0.0), Complex64::new(r1, 0.0), x);
        // first-order model: x e sin(ρ̄x)
        let model = x * e * ((r0 + e / 2.0) * x).sin();
        prop_assert!(got.is_finite());
        prop_assert!((got - model).abs() <= 1e-3 * model.abs() + 1e-18);
    }
}
