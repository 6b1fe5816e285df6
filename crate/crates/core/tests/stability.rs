use proptest::prelude::*;
use slspec::kernels::{build_kernels, delta_representation, PDRepresentation, DEFAULT_MAX_ITER, DEFAULT_TOL};
use slspec::stability::*;
use slspec::{PotentialSigma, RealGrid};

fn grid(m: usize) -> RealGrid {
    RealGrid::new(m).unwrap()
}

fn flat(m: usize, p: f64, d: f64) -> PDRepresentation {
    PDRepresentation {
        grid: grid(m),
        p: vec![p; m + 1],
        d,
    }
}

#[test]
fn model_char_and_zeros() {
    let pd = flat(100, 0.0, 0.0);
    assert!((char_from_pd(&pd, 2.25) - 1.5).abs() < 1e-12);
    let z = zeros_from_pd(&pd, 10).unwrap();
    for (n, r) in z.iter().enumerate() {
        assert!((r.re - n as f64).abs() < 1e-10 && r.im.abs() < 1e-12);
    }
}

#[test]
fn pd_from_kernels_matches_forward() {
    let s = PotentialSigma::constant(grid(200), 0.4);
    let k = build_kernels(&s, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let pd = delta_representation(&k, 0.2);
    for &lam in &[0.5, 2.0, 7.0] {
        let f = slspec::forward::characteristic(&s, 0.2, lam).unwrap().value;
        assert!((char_from_pd(&pd, lam) - f).abs() < 5e-3);
    }
}

#[test]
fn report_invariants_hold() {
    let exp = perturbation_experiment(&flat(200, 0.0, 0.0), 20, 1e-3, 30, 7).unwrap();
    assert_eq!(exp.reports.len(), 20);
    for r in &exp.reports {
        assert!(r.lhs >= 0.0 && r.rhs > 0.0);
        assert!((r.ratio - r.lhs / r.rhs).abs() < 1e-15);
        assert!(r.lhs <= exp.max_ratio * r.rhs * (1.0 + 1e-12));
        assert!(r.rhs <= 2.0 * 1e-3 * (1.0 + 1e-12));
    }
    assert!(exp.conserved);
}

#[test]
fn empirical_constant_is_stable_across_delta() {
    let base = flat(200, 0.0, 0.0);
    let c: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&d| perturbation_experiment(&base, 20, d, 30, 11).unwrap().max_ratio)
        .collect();
    let (lo, hi) = (c.iter().cloned().fold(f64::INFINITY, f64::min), c.iter().cloned().fold(0.0, f64::max));
    assert!(hi <= 1.5 * lo, "{c:?}");
    let half = perturbation_experiment(&base, 20, 5e-4, 30, 11).unwrap().max_ratio;
    assert!((half - c[1]).abs() <= 0.3 * c[1]);
}

#[test]
fn experiments_are_deterministic() {
    let base = flat(64, 0.1, -0.2);
    let a = perturbation_experiment(&base, 6, 1e-3, 10, 99).unwrap();
    let b = perturbation_experiment(&base, 6, 1e-3, 10, 99).unwrap();
    assert_eq!(a.reports, b.reports);
    let c = perturbation_experiment(&base, 6, 1e-3, 10, 100).unwrap();
    assert_ne!(a.reports, c.reports);
}

#[test]
fn conservation_threshold_is_the_largest_clean_prefix() {
    let base = flat(100, 0.0, 0.0);
    let exps: Vec<PerturbationExperiment> = [1e-4, 1e-3, 1e-2]
        .iter()
        .map(|&d| perturbation_experiment(&base, 5, d, 10, 3).unwrap())
        .collect();
    assert_eq!(conservation_threshold(&exps), Some(1e-2));
    let mut broken = exps.clone();
    broken[1].conserved = false;
    assert_eq!(conservation_threshold(&broken), Some(1e-4));
}

#[test]
fn coefficient_stability_sweeps() {
    let sizes = [0.2, 0.1, 0.05, 0.025];
    let shipped: Vec<(PotentialSigma, f64)> = vec![
        (PotentialSigma::constant(grid(200), 0.5), 0.0),
        (PotentialSigma::from_fn(grid(200), |x| 0.3 * x.sin()), 0.2),
        (PotentialSigma::from_fn(grid(200), |x| if x < std::f64::consts::FRAC_PI_2 { 0.0 } else { 1.0 }), 0.0),
    ];
    for (s, h) in &shipped {
        let rows = coefficient_stability_experiment(s, *h, &sizes, 20).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].d <= w[0].d, "{rows:?}");
        }
        let lip: Vec<f64> = rows.iter().map(|r| r.d / r.s).collect();
        let (lo, hi) = (lip.iter().cloned().fold(f64::INFINITY, f64::min), lip.iter().cloned().fold(0.0, f64::max));
        assert!(hi.is_finite() && hi <= 2.0 * lo, "{lip:?}");
    }
    let rows = coefficient_stability_experiment(&shipped[0].0, 0.0, &sizes, 20).unwrap();
    assert!(rows[3].d / rows[0].d <= 0.3);
}

#[test]
fn bump_has_unit_norm() {
    let b = unit_bump(&PotentialSigma::zero(grid(200)));
    assert!((b.l2_norm() - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn small_constant_p_moves_zeros_linearly(eps in -1e-3f64..1e-3) {
        let base = zeros_from_pd(&flat(100, 0.0, 0.0), 12).unwrap();
        let moved = zeros_from_pd(&flat(100, eps, 0.0), 12).unwrap();
        for (a, b) in base.iter().zip(&moved).skip(1) {
            let dz = (a - b).norm();
            prop_assert!(dz <= 2.0 * eps.abs() + 1e-10, "{dz} vs {eps}");
        }
    }

    #[test]
    fn random_perturbations_respect_delta(seed in 0u64..1000, trial in 0usize..50, delta in 1e-4f64..1e-1) {
        let base = flat(64, 0.2, 0.1);
        let p = random_perturbation(&base, seed, trial, delta);
        let diff = PDRepresentation {
            grid: base.grid.clone(),
            p: base.p.iter().zip(&p.p).map(|(a, b)| a - b).collect(),
            d: 0.0,
        };
        let norm = diff.l2_norm();
        prop_assert!(norm <= delta * (1.0 + 1e-9) && norm >= 0.5 * delta * (1.0 - 1e-9));
        prop_assert!((p.d - base.d).abs() <= delta);
    }
}
