use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn ncrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncrank"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn a_priori_count_for_unit_beta() {
    let out = ncrank(&["iterations", "--beta", "1.0", "--delta", "0.1", "--radius", "explicit", "--mode", "apriori"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "68\n");
}

#[test]
fn residual_count_defaults_to_explicit_radius() {
    let out = ncrank(&["iterations", "--beta", "0.1", "--delta", "0.1", "--mode", "residual"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "47\n");
}

#[test]
fn step_count_and_optimal_radius() {
    let out = ncrank(&["iterations", "--beta", "0.01", "--delta", "0.1", "--mode", "step"]);
    assert_eq!(stdout(&out), "4513\n");
    let out = ncrank(&["iterations", "--beta", "0.1", "--delta", "0.01", "--radius", "optimal", "--mode", "apriori"]);
    assert_eq!(stdout(&out), "541957\n");
}

#[test]
fn zero_block_pencil_rank_is_exact() {
    let a0 = data("a0.json");
    let out = ncrank(&["rank", a0.to_str().unwrap(), "--auto-block", "--y", "1e-5", "--eps", "1e-3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["exact"], 2);
    assert_eq!(json["N"], 5);
}

#[test]
fn bounds_only_exit_with_two() {
    // Without a block the moment and θ bounds for A0 stop at 2 ≤ rank ≤ 5.
    let a0 = data("a0.json");
    let out = ncrank(&["rank", a0.to_str().unwrap(), "--y", "1e-2", "--eps", "1e-3"]);
    assert_eq!(out.status.code(), Some(2));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(json["exact"].is_null());
}

#[test]
fn user_block_is_one_based() {
    let a0 = data("a0.json");
    let out = ncrank(&["rank", a0.to_str().unwrap(), "--block", "1,2,3,4:1,2,3,4", "--y", "1e-5", "--eps", "1e-3"]);
    assert_eq!(out.status.code(), Some(0));
    let out = ncrank(&["rank", a0.to_str().unwrap(), "--block", "5:5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn validation_errors_exit_with_one() {
    let semi = data("semicircle.json");
    let semi = semi.to_str().unwrap();
    for args in [
        vec!["iterations", "--beta", "-1", "--delta", "0.1"],
        vec!["iterations", "--beta", "1", "--delta", "0.1", "--mode", "bogus"],
        vec!["theta", semi, "--ymin", "1", "--ymax", "0.1", "--points", "3"],
        vec!["density", semi, "--tmin", "0", "--tmax", "1", "--points", "1"],
        vec!["mc", semi, "--dim", "1", "--samples", "1", "--seed", "0"],
        vec!["bound", "/nonexistent.json"],
    ] {
        let out = ncrank(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn theta_csv_layout() {
    let semi = data("semicircle.json");
    let out = ncrank(&["theta", semi.to_str().unwrap(), "--ymin", "0.01", "--ymax", "100", "--points", "5", "--eps", "1e-6"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "y,theta,eps,iterations");
    assert_eq!(lines.len(), 6);
    let ys: Vec<f64> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ys[0], 100.0);
    assert_eq!(ys[4], 0.01);
    assert!((ys[2] - 1.0).abs() < 1e-12);
}

#[test]
fn bound_reports_moments() {
    let out = ncrank(&["bound", data("eta_t0.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((json["atom_bound"].as_f64().unwrap() - 0.58469).abs() < 1e-4);
    assert_eq!(json["lower"], 2);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let semi = data("semicircle.json");
    let full3 = data("full3.json");
    let runs: [Vec<&str>; 3] = [
        vec!["density", semi.to_str().unwrap(), "--tmin", "-2.5", "--tmax", "2.5", "--points", "11"],
        vec!["mc", full3.to_str().unwrap(), "--dim", "20", "--samples", "3", "--seed", "11", "--threads", "2"],
        vec!["rank", full3.to_str().unwrap(), "--y", "1e-2", "--eps", "0.05"],
    ];
    for args in runs {
        let a = ncrank(&args);
        let b = ncrank(&args);
        assert_eq!(a.status.code(), b.status.code());
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn mc_writes_csv_and_metadata_separately() {
    let out = ncrank(&["mc", data("semicircle.json").to_str().unwrap(), "--dim", "10", "--samples", "2", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("eigenvalue\n"));
    assert_eq!(text.lines().count(), 21);
    let meta: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(meta["seed"], 1);
    assert_eq!(meta["d"], 10);
}
