use serde_json::Value;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn slspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slspec")).args(args).output().unwrap()
}

fn write_sigma(path: &Path, m: usize, f: impl Fn(f64) -> f64) {
    let h = PI / m as f64;
    let mut s = String::from("x,sigma\n");
    for j in 0..m {
        let x = (j as f64 + 0.5) * h;
        s.push_str(&format!("{x:?},{:?}\n", f(x)));
    }
    fs::write(path, s).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_kind(o: &Output) -> String {
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    v["error"]["kind"].as_str().unwrap().to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn forward_zero_potential_gives_squares() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = dir.path().join("zero.csv");
    write_sigma(&sigma, 200, |_| 0.0);
    let out = dir.path().join("f");
    let o = slspec(&["forward", "--sigma", p(&sigma), "--N", "5", "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let data = read_json(&out.join("spectral_data.json"));
    for (n, d) in data.as_array().unwrap().iter().enumerate() {
        assert!((d["lambda"].as_f64().unwrap() - (n * n) as f64).abs() < 1e-9);
    }
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["config"]["defaults"]["N"], 40);
    assert_eq!(report["config"]["defaults"]["grid"], 200);
    assert!(out.join("remainders.csv").exists());
}

#[test]
fn forward_constant_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = dir.path().join("c.csv");
    write_sigma(&sigma, 200, |_| 0.5);
    let out = dir.path().join("f");
    let o = slspec(&["forward", "--sigma", p(&sigma), "--N", "10", "--out", p(&out)]);
    assert!(o.status.success());
    let data = read_json(&out.join("spectral_data.json"));
    let d = data.as_array().unwrap();
    assert!((d[0]["lambda"].as_f64().unwrap() + 0.25).abs() < 1e-9);
    for (n, e) in d.iter().enumerate().skip(1) {
        let a = 2.0 / (PI * (1.0 + 0.25 / (n * n) as f64));
        assert!((e["alpha"].as_f64().unwrap() - a).abs() < 1e-9);
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = slspec(&["forward", "--sigma", p(&dir.path().join("nope.csv")), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_kind(&o), "io");
}

#[test]
fn inverse_of_model_data_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("model.json");
    let records: Vec<Value> = (0..=20)
        .map(|n| {
            let alpha = if n == 0 { 1.0 / PI } else { 2.0 / PI };
            serde_json::json!({ "n": n, "lambda": (n * n) as f64, "alpha": alpha, "source": "measured" })
        })
        .collect();
    fs::write(&data, serde_json::to_string(&records).unwrap()).unwrap();
    let out = dir.path().join("i");
    let o = slspec(&["inverse", "--data", p(&data), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("report.json"));
    assert!(report["H"].as_f64().unwrap().abs() < 1e-10);
    assert_eq!(report["config"]["N"], 20);
    for line in fs::read_to_string(out.join("sigma.csv")).unwrap().lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v.abs() < 1e-10);
    }
}

#[test]
fn negative_weight_fails_validation_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.json");
    let records: Vec<Value> = (0..=10)
        .map(|n| {
            let alpha = if n == 3 { -0.5 } else if n == 0 { 1.0 / PI } else { 2.0 / PI };
            serde_json::json!({ "n": n, "lambda": (n * n) as f64 + 0.01, "alpha": alpha, "source": "measured" })
        })
        .collect();
    fs::write(&data, serde_json::to_string(&records).unwrap()).unwrap();
    let out = dir.path().join("i");
    let o = slspec(&["inverse", "--data", p(&data), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_kind(&o), "validation");
    assert!(String::from_utf8_lossy(&o.stderr).contains("condition (i)"));
    let v = slspec(&["validate", "--data", p(&data)]);
    assert_eq!(v.status.code(), Some(3));
    let forced = slspec(&["inverse", "--data", p(&data), "--out", p(&out), "--force"]);
    assert_ne!(forced.status.code(), Some(3));
}

#[test]
fn roundtrip_improves_with_n_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = dir.path().join("s.csv");
    write_sigma(&sigma, 200, |x| 0.3 * x.sin());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = slspec(&["roundtrip", "--sigma", p(&sigma), "--H", "0.2", "--out", p(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    for f in ["sigma_true.csv", "sigma_rec.csv", "roundtrip.json", "n_doubling.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let rt = read_json(&a.join("roundtrip.json"));
    assert!(rt["l2_error"].as_f64().unwrap() <= 0.05);
    assert!(rt["h_error"].as_f64().unwrap() <= 0.05);
    let table = fs::read_to_string(a.join("n_doubling.csv")).unwrap();
    let errs: Vec<f64> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
}

#[test]
fn stability_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = slspec(&[
            "stability", "--N", "10", "--trials", "4", "--delta", "1e-3", "--seed", seed, "--grid", "100",
            "--out", p(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a", "5");
    let b = run("b", "5");
    let c = run("c", "6");
    let pa = fs::read(a.join("perturbation.csv")).unwrap();
    assert_eq!(pa, fs::read(b.join("perturbation.csv")).unwrap());
    assert_ne!(pa, fs::read(c.join("perturbation.csv")).unwrap());
    let cfg = read_json(&a.join("stability.json"));
    assert_eq!(cfg["seed"], 5);
    assert_eq!(cfg["trials"], 4);
    assert_eq!(cfg["count"], 10);
    let text = String::from_utf8(pa).unwrap();
    assert_eq!(text.lines().next().unwrap(), "trial,delta,lhs,rhs,ratio");
    assert_eq!(text.lines().count(), 5);
    assert!(a.join("coefficient_stability.csv").exists());
}

#[test]
fn kernels_export() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = dir.path().join("c.csv");
    write_sigma(&sigma, 16, |_| 0.4);
    let out = dir.path().join("k");
    let o = slspec(&["kernels", "--sigma", p(&sigma), "--H", "0.2", "--out", p(&out)]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(out.join("kernels.csv")).unwrap().lines().count(), 1 + 17 * 18 / 2);
    assert_eq!(fs::read_to_string(out.join("kernels_c.csv")).unwrap().lines().count(), 1 + 17);
    let r = read_json(&out.join("report.json"));
    assert!(r["iterations"].as_u64().unwrap() >= 1);
}

#[test]
fn too_coarse_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = dir.path().join("c.csv");
    write_sigma(&sigma, 16, |_| 0.1);
    let o = slspec(&["forward", "--sigma", p(&sigma), "--grid", "4", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
}
