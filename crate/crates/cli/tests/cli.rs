//! Black-box tests of the installed binary: artifact contracts, config
//! precedence, determinism across reruns, and the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lattice-pinn"))
}

fn run_ok(args: &[&str], dir: &Path) -> String {
    let out = bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary launches");
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout is utf-8")
}

fn run_raw(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary launches")
}

#[test]
fn export_dataset_is_byte_stable_and_reimports_equal() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(&["export-dataset", "--out", "data.csv"], dir.path());
    assert!(stdout.contains("wrote 50 rows"));
    let first = std::fs::read(dir.path().join("data.csv")).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 51);
    assert_eq!(lines[0], "alloy,strength_mpa,load,displacement_mm");
    assert_eq!(lines[1], "Structural Steel,250,1000,0.003518");
    run_ok(&["export-dataset", "--out", "again.csv"], dir.path());
    let second = std::fs::read(dir.path().join("again.csv")).unwrap();
    assert_eq!(first, second, "export must be byte stable across runs");
}

#[test]
fn train_writes_four_artifacts_and_one_epoch_means_one_history_row() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(
        &["train", "--epochs", "1", "--hidden", "8,8", "--out", "t"],
        dir.path(),
    );
    assert!(stdout.contains("trained for 1 epochs"));
    let out = dir.path().join("t");
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        vec![
            "checkpoint.json",
            "history.csv",
            "manifest.json",
            "metrics.json"
        ]
    );
    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2, "header plus one epoch row");
    assert!(history.starts_with("epoch,data_loss,physics_loss,init_loss,boundary_loss,total_loss"));
}

#[test]
fn train_with_zero_lambda_reports_total_equal_to_data_loss() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "train", "--lambda", "0", "--epochs", "5", "--hidden", "8,8", "--out", "t",
        ],
        dir.path(),
    );
    let history = std::fs::read_to_string(dir.path().join("t/history.csv")).unwrap();
    for line in history.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let data: f64 = cols[1].parse().unwrap();
        let total: f64 = cols[5].parse().unwrap();
        assert_eq!(
            data, total,
            "with a zero physics weight the total must equal the data term"
        );
    }
}

#[test]
fn rerunning_train_with_the_same_flags_reproduces_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["train", "--epochs", "40", "--hidden", "8,8", "--out", "a"];
    run_ok(&args, dir.path());
    let args2 = ["train", "--epochs", "40", "--hidden", "8,8", "--out", "b"];
    run_ok(&args2, dir.path());
    for name in [
        "manifest.json",
        "metrics.json",
        "history.csv",
        "checkpoint.json",
    ] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} must be identical across reruns");
    }
}

#[test]
fn train_consumes_an_exported_dataset_without_mutating_it() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["export-dataset", "--out", "data.csv"], dir.path());
    let before = std::fs::read(dir.path().join("data.csv")).unwrap();
    run_ok(
        &[
            "train", "--data", "data.csv", "--epochs", "3", "--hidden", "8", "--out", "t",
        ],
        dir.path(),
    );
    let after = std::fs::read(dir.path().join("data.csv")).unwrap();
    assert_eq!(before, after, "training must not touch its input file");
    let manifest = std::fs::read_to_string(dir.path().join("t/manifest.json")).unwrap();
    assert!(manifest.contains("data.csv"), "manifest records the source");
}

#[test]
fn config_file_applies_but_command_line_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.conf"),
        "epochs = 7\nhidden = 8,8  # keep it small\nlambda = 0.25\n",
    )
    .unwrap();
    let stdout = run_ok(
        &[
            "train", "--config", "run.conf", "--epochs", "9", "--out", "t",
        ],
        dir.path(),
    );
    assert!(
        stdout.contains("trained for 9 epochs"),
        "the flag must override the file: {stdout}"
    );
    assert!(
        stdout.contains("lambda 0.25"),
        "unflagged keys must come from the file: {stdout}"
    );
}

#[test]
fn compare_emits_verdict_reports_and_surfaces() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(
        &["compare", "--epochs", "40", "--hidden", "8,8", "--out", "c"],
        dir.path(),
    );
    assert!(stdout.contains("verdict: "));
    assert!(stdout.contains("PINN"));
    assert!(stdout.contains("LinearRegression"));
    let out = dir.path().join("c");
    for name in [
        "comparison.json",
        "predictions.csv",
        "residuals_pinn.csv",
        "residuals_baseline.csv",
        "surface_pinn.csv",
        "surface_baseline.csv",
        "manifest.json",
    ] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let comparison: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("comparison.json")).unwrap())
            .unwrap();
    for model in ["pinn", "baseline"] {
        for key in ["r2", "mse", "mae"] {
            assert!(
                comparison[model][key].is_number(),
                "comparison.json must carry {model}.{key}"
            );
        }
    }
    let verdict = comparison["verdict"].as_str().unwrap();
    assert!(["PINN", "LinearRegression", "mixed", "tie"].contains(&verdict));
}

/// The closed-form baseline is affine in each input, so along any grid line
/// of its exported surface the second difference must vanish.
#[test]
fn baseline_surface_grid_is_affine_along_both_axes() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &["compare", "--epochs", "5", "--hidden", "8", "--out", "c"],
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("c/surface_baseline.csv")).unwrap();
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        rows.push((
            cols[0].parse().unwrap(),
            cols[1].parse().unwrap(),
            cols[2].parse().unwrap(),
        ));
    }
    let n = 30usize;
    assert_eq!(rows.len(), n * n);
    let v = |i: usize, j: usize| rows[i * n + j].2;
    for i in 0..n {
        for j in 1..n - 1 {
            let second = v(i, j + 1) - 2.0 * v(i, j) + v(i, j - 1);
            assert!(
                second.abs() < 1e-9,
                "load-axis second difference {second} at ({i},{j})"
            );
        }
    }
    for j in 0..n {
        for i in 1..n - 1 {
            let second = v(i + 1, j) - 2.0 * v(i, j) + v(i - 1, j);
            assert!(
                second.abs() < 1e-9,
                "strength-axis second difference {second} at ({i},{j})"
            );
        }
    }
}

#[test]
fn compare_seed_sweep_writes_per_seed_reports_and_medians() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(
        &[
            "compare", "--epochs", "12", "--hidden", "8", "--seeds", "3", "--out", "c",
        ],
        dir.path(),
    );
    assert!(stdout.contains("sweep over 3 seeds"));
    let sweep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c/sweep.json")).unwrap())
            .unwrap();
    assert_eq!(sweep["per_seed"].as_array().unwrap().len(), 3);
    assert!(sweep["medians"]["pinn"]["r2"].is_number());
    assert!(sweep["medians"]["baseline"]["mae"].is_number());
}

#[test]
fn pde_writes_field_history_and_reports_relative_error() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(
        &[
            "pde",
            "--equation",
            "wave",
            "--epochs",
            "3",
            "--hidden",
            "8",
            "--n-colloc",
            "16",
            "--n-init",
            "4",
            "--n-boundary",
            "4",
            "--grid",
            "6",
            "--out",
            "p",
        ],
        dir.path(),
    );
    assert!(stdout.contains("wave equation, coefficient 1"));
    assert!(stdout.contains("relative L2 error"));
    let out = dir.path().join("p");
    let field = std::fs::read_to_string(out.join("field.csv")).unwrap();
    assert_eq!(field.lines().count(), 1 + 36);
    assert!(field.starts_with("x,t,u_pred,u_exact,abs_error"));
    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 3);
    assert!(out.join("solution.json").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn gradcheck_prints_max_relative_errors() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(
        &["gradcheck", "--networks", "1", "--expressions", "2"],
        dir.path(),
    );
    assert!(stdout.contains("max relative error"));
    assert!(stdout.contains("gradcheck ok"));
}

#[test]
fn usage_and_data_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_raw(&["pde", "--equation", "advection"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(1),
        "unknown equation is a usage error"
    );

    let out = run_raw(&["train", "--data", "missing.csv"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(1),
        "missing dataset is a data error"
    );

    std::fs::write(dir.path().join("bad.conf"), "not a key value line\n").unwrap();
    let out = run_raw(&["train", "--config", "bad.conf"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(1),
        "malformed config is a usage error"
    );

    std::fs::write(
        dir.path().join("data.csv"),
        "alloy,strength_mpa,load\nx,1,2\n",
    )
    .unwrap();
    let out = run_raw(&["train", "--data", "data.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1), "malformed csv is a data error");

    let out = run_raw(&["no-such-command"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(1),
        "unknown subcommand is a usage error"
    );
}

#[test]
fn numerical_blowups_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_raw(
        &[
            "train", "--lr", "1e80", "--epochs", "10", "--hidden", "8,8", "--out", "t",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "a non-finite loss must exit 2: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("non-finite"));
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_raw(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for verb in ["train", "compare", "pde", "export-dataset", "gradcheck"] {
        assert!(stdout.contains(verb), "help must list {verb}");
    }
    let out = run_raw(&["--version"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}
