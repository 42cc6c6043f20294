//! End-to-end runs behind the CLI verbs. Each run resolves a fully specified
//! configuration into artifacts under one output directory, finishing with a
//! manifest that records hyperparameters, seeds, dataset fingerprints, and
//! the hash of every other file written, so a run can be reproduced and
//! verified from its outputs alone.

use crate::autodiff::fd::relative_gap;
use crate::autodiff::{dual, gradient, Dual, SpacetimeJet};
use crate::error::Result;
use crate::lattice::{
    self, builtin_dataset, train_baseline, train_pinn_with_history, DisplacementModel,
    LatticeSample, LinearModel, SplitConfig, TrainConfig, TrainedPinn, DEFAULT_LOAD_RANGE,
    DEFAULT_STRENGTH_RANGE,
};
use crate::metrics::{compare, error_histogram, median, MetricsReport};
use crate::net::{Activation, ActivationPattern, DenseNetwork, NetworkSpec, Scratch};
use crate::optimize::history_csv;
use crate::pde::{field_grid, relative_l2_error, train_pde, PdeTrainConfig};
use crate::pinn::{LossBreakdown, PdeProblem};
use crate::report::{
    self, dataset_fingerprint, predictions_csv, residuals_csv, split_fingerprint, surface_csv,
    write_json,
};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

/// Weight grid exercised by the regularization sweep.
pub const LAMBDA_SWEEP: [f64; 4] = [0.0, 0.01, 0.1, 1.0];

/// Default resolution of exported prediction surfaces.
pub const SURFACE_RESOLUTION: usize = 30;

/// Default bin count for residual histograms.
pub const HISTOGRAM_BINS: usize = 20;

/// Default evaluation grid for PDE error reports.
pub const PDE_GRID: usize = 50;

fn load_rows(data: Option<&Path>) -> Result<(Vec<LatticeSample>, String)> {
    match data {
        None => Ok((builtin_dataset(), "builtin".to_string())),
        Some(path) => Ok((lattice::load_csv(path)?, path.display().to_string())),
    }
}

fn artifact_hashes(dir: &Path, names: &[&str]) -> Result<Value> {
    let mut map = serde_json::Map::new();
    for name in names {
        map.insert(
            name.to_string(),
            json!({ "sha256": report::sha256_file(&dir.join(name))? }),
        );
    }
    Ok(Value::Object(map))
}

fn predict_all<M: DisplacementModel>(model: &M, rows: &[LatticeSample]) -> Vec<f64> {
    rows.iter()
        .map(|r| model.predict_mm(r.strength_mpa, r.load))
        .collect()
}

fn select(rows: &[LatticeSample], indices: &[usize]) -> Vec<LatticeSample> {
    indices.iter().map(|&i| rows[i].clone()).collect()
}

/// A fully resolved `train` invocation.
#[derive(Clone, Debug)]
pub struct TrainRun {
    /// CSV path, or the built-in dataset when absent.
    pub data: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub train_fraction: f64,
    pub config: TrainConfig,
}

/// What `train` leaves behind, for terminal reporting.
#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub test: MetricsReport,
    pub full: MetricsReport,
    pub final_loss: LossBreakdown,
    pub epochs_run: usize,
}

/// Train the displacement network and write exactly four artifacts:
/// checkpoint.json, history.csv, metrics.json, and manifest.json.
pub fn run_train(run: &TrainRun) -> Result<TrainSummary> {
    let (rows, source) = load_rows(run.data.as_deref())?;
    let data_fp = dataset_fingerprint(&rows);
    let split_cfg = SplitConfig {
        train_fraction: run.train_fraction,
        seed: run.config.seed,
    };
    let (train_idx, test_idx) = lattice::split_indices(rows.len(), &split_cfg)?;
    let split_fp = split_fingerprint(&data_fp, &train_idx, &test_idx);
    let train_rows = select(&rows, &train_idx);
    let test_rows = select(&rows, &test_idx);

    let (model, history) = train_pinn_with_history(&train_rows, &run.config)?;

    let seed = run.config.seed;
    let test_actual: Vec<f64> = test_rows.iter().map(|r| r.displacement_mm).collect();
    let full_actual: Vec<f64> = rows.iter().map(|r| r.displacement_mm).collect();
    let test_report = MetricsReport::from_predictions(
        "PINN",
        seed,
        &split_fp,
        &test_actual,
        &predict_all(&model, &test_rows),
    )?;
    let full_report = MetricsReport::from_predictions(
        "PINN",
        seed,
        &split_fp,
        &full_actual,
        &predict_all(&model, &rows),
    )?;

    std::fs::create_dir_all(&run.out_dir)?;
    model.save(&run.out_dir.join("checkpoint.json"))?;
    std::fs::write(run.out_dir.join("history.csv"), history_csv(&history))?;
    write_json(
        &run.out_dir.join("metrics.json"),
        &report::metrics_json(&test_report, &full_report),
    )?;

    let manifest = json!({
        "command": "train",
        "format_version": 1,
        "dataset": { "source": source, "fingerprint": data_fp, "rows": rows.len() },
        "split": {
            "train_fraction": run.train_fraction,
            "seed": seed,
            "train_indices": train_idx,
            "test_indices": test_idx,
            "fingerprint": split_fp,
        },
        "config": run.config,
        "network": {
            "layer_sizes": model.net.layer_sizes(),
            "activation": model.net.hidden_activation().as_str(),
            "param_count": model.net.param_count(),
        },
        "artifacts": artifact_hashes(&run.out_dir, &["checkpoint.json", "history.csv", "metrics.json"])?,
    });
    write_json(&run.out_dir.join("manifest.json"), &manifest)?;

    let final_loss = *history.last().expect("training history is never empty");
    Ok(TrainSummary {
        test: test_report,
        full: full_report,
        final_loss,
        epochs_run: history.len(),
    })
}

/// A fully resolved `compare` invocation.
#[derive(Clone, Debug)]
pub struct CompareRun {
    pub data: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub train_fraction: f64,
    pub config: TrainConfig,
    /// When positive, additionally rerun the head-to-head over seeds
    /// 0..sweep_seeds and aggregate medians.
    pub sweep_seeds: usize,
    /// When set, additionally rerun the network across LAMBDA_SWEEP.
    pub lambda_sweep: bool,
}

/// Head-to-head outcome for one seed, on held-out rows.
#[derive(Clone, Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    pub pinn: MetricsReport,
    pub baseline: MetricsReport,
    pub verdict: String,
}

/// What `compare` leaves behind, for terminal reporting.
#[derive(Clone, Debug)]
pub struct CompareSummary {
    pub pinn: MetricsReport,
    pub baseline: MetricsReport,
    pub verdict: String,
    pub sweep: Option<SweepSummary>,
}

/// Median metrics over a seed sweep.
#[derive(Clone, Debug)]
pub struct SweepSummary {
    pub seeds: usize,
    pub pinn_median: (f64, f64, f64),
    pub baseline_median: (f64, f64, f64),
    pub pinn_outright_wins: usize,
}

/// One seed's paired fit: the scored outcome plus the fitted models and the
/// split indices that produced them.
pub struct HeadToHead {
    pub outcome: SeedOutcome,
    pub pinn: TrainedPinn,
    pub baseline: LinearModel,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Train both models on one seed's split and evaluate on its held-out rows.
pub fn head_to_head(
    rows: &[LatticeSample],
    data_fp: &str,
    train_fraction: f64,
    config: &TrainConfig,
) -> Result<HeadToHead> {
    let split_cfg = SplitConfig {
        train_fraction,
        seed: config.seed,
    };
    let (train_idx, test_idx) = lattice::split_indices(rows.len(), &split_cfg)?;
    let split_fp = split_fingerprint(data_fp, &train_idx, &test_idx);
    let train_rows = select(rows, &train_idx);
    let test_rows = select(rows, &test_idx);

    let (pinn, _) = train_pinn_with_history(&train_rows, config)?;
    let baseline = train_baseline(&train_rows)?;

    let actual: Vec<f64> = test_rows.iter().map(|r| r.displacement_mm).collect();
    let pinn_report = MetricsReport::from_predictions(
        "PINN",
        config.seed,
        &split_fp,
        &actual,
        &predict_all(&pinn, &test_rows),
    )?;
    let baseline_report = MetricsReport::from_predictions(
        "LinearRegression",
        config.seed,
        &split_fp,
        &actual,
        &predict_all(&baseline, &test_rows),
    )?;
    let comparison = compare(&pinn_report, &baseline_report)?;
    let outcome = SeedOutcome {
        seed: config.seed,
        pinn: pinn_report,
        baseline: baseline_report,
        verdict: comparison.verdict.label().to_string(),
    };
    Ok(HeadToHead {
        outcome,
        pinn,
        baseline,
        train_idx,
        test_idx,
    })
}

fn report_brief(r: &MetricsReport) -> Value {
    json!({ "r2": r.r2, "mse": r.mse, "mae": r.mae, "n": r.n })
}

/// Benchmark the network against the closed-form baseline on an identical
/// split, writing the paired reports, verdict, prediction and residual CSVs,
/// both prediction surfaces, optional sweeps, and a manifest.
pub fn run_compare(run: &CompareRun) -> Result<CompareSummary> {
    let (rows, source) = load_rows(run.data.as_deref())?;
    let data_fp = dataset_fingerprint(&rows);

    let HeadToHead {
        outcome,
        pinn,
        baseline,
        train_idx,
        test_idx,
    } = head_to_head(&rows, &data_fp, run.train_fraction, &run.config)?;
    let test_rows = select(&rows, &test_idx);
    let test_actual: Vec<f64> = test_rows.iter().map(|r| r.displacement_mm).collect();
    let pinn_test_pred = predict_all(&pinn, &test_rows);
    let baseline_test_pred = predict_all(&baseline, &test_rows);

    std::fs::create_dir_all(&run.out_dir)?;
    std::fs::write(
        run.out_dir.join("predictions.csv"),
        predictions_csv(
            &rows,
            &test_idx,
            &predict_all(&pinn, &rows),
            &predict_all(&baseline, &rows),
        ),
    )?;
    std::fs::write(
        run.out_dir.join("residuals_pinn.csv"),
        residuals_csv(&test_actual, &pinn_test_pred),
    )?;
    std::fs::write(
        run.out_dir.join("residuals_baseline.csv"),
        residuals_csv(&test_actual, &baseline_test_pred),
    )?;
    let surface_pinn = lattice::predict_surface(
        &pinn,
        DEFAULT_STRENGTH_RANGE,
        DEFAULT_LOAD_RANGE,
        SURFACE_RESOLUTION,
    )?;
    let surface_base = lattice::predict_surface(
        &baseline,
        DEFAULT_STRENGTH_RANGE,
        DEFAULT_LOAD_RANGE,
        SURFACE_RESOLUTION,
    )?;
    std::fs::write(
        run.out_dir.join("surface_pinn.csv"),
        surface_csv(&surface_pinn),
    )?;
    std::fs::write(
        run.out_dir.join("surface_baseline.csv"),
        surface_csv(&surface_base),
    )?;

    let comparison_value = json!({
        "pinn": outcome.pinn,
        "baseline": outcome.baseline,
        "deltas": {
            "r2": outcome.pinn.r2 - outcome.baseline.r2,
            "mse": outcome.pinn.mse - outcome.baseline.mse,
            "mae": outcome.pinn.mae - outcome.baseline.mae,
        },
        "verdict": outcome.verdict,
        "histograms": {
            "pinn": error_histogram(&outcome.pinn.residuals, HISTOGRAM_BINS)?,
            "baseline": error_histogram(&outcome.baseline.residuals, HISTOGRAM_BINS)?,
        },
    });
    write_json(&run.out_dir.join("comparison.json"), &comparison_value)?;

    let mut artifact_names = vec![
        "comparison.json",
        "predictions.csv",
        "residuals_pinn.csv",
        "residuals_baseline.csv",
        "surface_pinn.csv",
        "surface_baseline.csv",
    ];

    let sweep = if run.sweep_seeds > 0 {
        let mut per_seed = Vec::with_capacity(run.sweep_seeds);
        for seed in 0..run.sweep_seeds as u64 {
            let mut cfg = run.config.clone();
            cfg.seed = seed;
            let fitted = head_to_head(&rows, &data_fp, run.train_fraction, &cfg)?;
            per_seed.push(fitted.outcome);
        }
        let med = |f: fn(&MetricsReport) -> f64, pick: fn(&SeedOutcome) -> &MetricsReport| {
            let vals: Vec<f64> = per_seed.iter().map(|o| f(pick(o))).collect();
            median(&vals).expect("sweep is non-empty")
        };
        let pinn_median = (
            med(|r| r.r2, |o| &o.pinn),
            med(|r| r.mse, |o| &o.pinn),
            med(|r| r.mae, |o| &o.pinn),
        );
        let baseline_median = (
            med(|r| r.r2, |o| &o.baseline),
            med(|r| r.mse, |o| &o.baseline),
            med(|r| r.mae, |o| &o.baseline),
        );
        let wins = per_seed.iter().filter(|o| o.verdict == "PINN").count();
        let sweep_value = json!({
            "seeds": (0..run.sweep_seeds as u64).collect::<Vec<u64>>(),
            "per_seed": per_seed.iter().map(|o| json!({
                "seed": o.seed,
                "pinn": report_brief(&o.pinn),
                "baseline": report_brief(&o.baseline),
                "verdict": o.verdict,
            })).collect::<Vec<Value>>(),
            "medians": {
                "pinn": { "r2": pinn_median.0, "mse": pinn_median.1, "mae": pinn_median.2 },
                "baseline": {
                    "r2": baseline_median.0,
                    "mse": baseline_median.1,
                    "mae": baseline_median.2,
                },
            },
            "pinn_outright_wins": wins,
        });
        write_json(&run.out_dir.join("sweep.json"), &sweep_value)?;
        artifact_names.push("sweep.json");
        Some(SweepSummary {
            seeds: run.sweep_seeds,
            pinn_median,
            baseline_median,
            pinn_outright_wins: wins,
        })
    } else {
        None
    };

    if run.lambda_sweep {
        let mut per_lambda = Vec::with_capacity(LAMBDA_SWEEP.len());
        for &lambda in &LAMBDA_SWEEP {
            let mut cfg = run.config.clone();
            cfg.lambda = lambda;
            let o = head_to_head(&rows, &data_fp, run.train_fraction, &cfg)?.outcome;
            per_lambda.push(json!({
                "lambda": lambda,
                "pinn": report_brief(&o.pinn),
                "baseline": report_brief(&o.baseline),
                "verdict": o.verdict,
            }));
        }
        write_json(
            &run.out_dir.join("lambda_sweep.json"),
            &json!({ "lambdas": LAMBDA_SWEEP, "per_lambda": per_lambda }),
        )?;
        artifact_names.push("lambda_sweep.json");
    }

    let manifest = json!({
        "command": "compare",
        "format_version": 1,
        "dataset": { "source": source, "fingerprint": data_fp, "rows": rows.len() },
        "split": {
            "train_fraction": run.train_fraction,
            "seed": run.config.seed,
            "train_indices": train_idx,
            "test_indices": test_idx,
            "fingerprint": outcome.pinn.split_fingerprint,
        },
        "config": run.config,
        "baseline": "ordinary least squares via normal equations",
        "sweep_seeds": run.sweep_seeds,
        "lambda_sweep": run.lambda_sweep,
        "surface": {
            "strength_range": DEFAULT_STRENGTH_RANGE,
            "load_range": DEFAULT_LOAD_RANGE,
            "resolution": SURFACE_RESOLUTION,
        },
        "artifacts": artifact_hashes(&run.out_dir, &artifact_names)?,
    });
    write_json(&run.out_dir.join("manifest.json"), &manifest)?;

    Ok(CompareSummary {
        pinn: outcome.pinn,
        baseline: outcome.baseline,
        verdict: outcome.verdict,
        sweep,
    })
}

/// A fully resolved `pde` invocation.
#[derive(Clone, Debug)]
pub struct PdeRun {
    pub problem: PdeProblem,
    pub out_dir: PathBuf,
    pub config: PdeTrainConfig,
    pub grid_resolution: usize,
}

/// What `pde` leaves behind, for terminal reporting.
#[derive(Clone, Debug)]
pub struct PdeSummary {
    pub relative_l2: f64,
    pub final_loss: LossBreakdown,
    pub epochs_run: usize,
}

/// Train a PDE surrogate, measure it against the analytic solution, and write
/// checkpoint, loss history, field grid, solution report, and manifest.
pub fn run_pde(run: &PdeRun) -> Result<PdeSummary> {
    let (trained, history) = train_pde(&run.problem, &run.config)?;
    let analytic = run.problem.analytic_solution()?;
    let rel_l2 = relative_l2_error(&trained.net, &analytic, &run.problem, run.grid_resolution)?;
    let grid = field_grid(&trained.net, &analytic, &run.problem, run.grid_resolution)?;

    std::fs::create_dir_all(&run.out_dir)?;
    trained.net.save(&run.out_dir.join("checkpoint.json"))?;
    std::fs::write(run.out_dir.join("history.csv"), history_csv(&history))?;
    std::fs::write(run.out_dir.join("field.csv"), report::field_csv(&grid))?;
    let final_loss = *history.last().expect("training history is never empty");
    write_json(
        &run.out_dir.join("solution.json"),
        &json!({
            "problem": run.problem,
            "relative_l2": rel_l2,
            "grid_resolution": run.grid_resolution,
            "final_loss": final_loss,
        }),
    )?;

    let manifest = json!({
        "command": "pde",
        "format_version": 1,
        "problem": run.problem,
        "config": run.config,
        "grid_resolution": run.grid_resolution,
        "artifacts": artifact_hashes(
            &run.out_dir,
            &["checkpoint.json", "history.csv", "field.csv", "solution.json"],
        )?,
    });
    write_json(&run.out_dir.join("manifest.json"), &manifest)?;

    Ok(PdeSummary {
        relative_l2: rel_l2,
        final_loss,
        epochs_run: history.len(),
    })
}

/// Write the built-in dataset as CSV.
pub fn run_export(out: &Path) -> Result<()> {
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    lattice::write_csv(out, &builtin_dataset())
}

/// Knobs for the differentiation self-check.
#[derive(Clone, Debug)]
pub struct GradcheckConfig {
    /// Production-architecture networks probed at first order.
    pub networks: usize,
    /// Random smooth expressions and small nets probed at second order.
    pub expressions: usize,
    pub seed: u64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            networks: 100,
            expressions: 50,
            seed: 42,
        }
    }
}

/// Outcome of the differentiation self-check.
#[derive(Clone, Debug)]
pub struct GradcheckReport {
    pub networks: usize,
    pub checked_coordinates: usize,
    /// Coordinates whose finite-difference probe crossed a ReLU kink.
    pub skipped_coordinates: usize,
    pub max_first_order_gap: f64,
    pub expressions: usize,
    pub max_second_order_gap: f64,
}

/// Supervision rows for the gradcheck loss, on the standardized scale.
struct ProbeRow {
    x: [f64; 2],
    target: f64,
    physics: f64,
}

fn probe_loss_terms(preds: &[f64], rows: &[ProbeRow]) -> (f64, f64) {
    let n = rows.len() as f64;
    let mut data = 0.0;
    let mut phys = 0.0;
    for (p, r) in preds.iter().zip(rows) {
        data += (p - r.target).powi(2);
        phys += (p - r.physics).powi(2);
    }
    (data / n, phys / n)
}

/// Forward every probe row, refusing if any activation pattern moved off the
/// base linear region; a pattern change means the finite-difference step
/// crossed a ReLU kink and the probe is not trustworthy there.
fn probe_loss_on_pattern(
    net: &DenseNetwork,
    rows: &[ProbeRow],
    base: &[ActivationPattern],
    lambda: f64,
    scratch: &mut Scratch,
) -> Option<f64> {
    let mut pattern = ActivationPattern::default();
    let mut preds = Vec::with_capacity(rows.len());
    for (row, expected) in rows.iter().zip(base) {
        let y = net.forward_pattern(&row.x, scratch, &mut pattern);
        if pattern != *expected {
            return None;
        }
        preds.push(y);
    }
    let (data, phys) = probe_loss_terms(&preds, rows);
    Some(data + lambda * phys)
}

const GRADCHECK_LAMBDA: f64 = 0.1;
const GRADCHECK_FD_H: f64 = 1e-5;
const GRADCHECK_FLOOR: f64 = 1e-6;

fn first_order_suite(cfg: &GradcheckConfig) -> Result<(usize, usize, f64)> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6772_6164);
    let mut max_gap = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut scratch = Scratch::default();

    for i in 0..cfg.networks {
        let spec = NetworkSpec::new(2, vec![64, 64, 32], cfg.seed.wrapping_add(i as u64));
        let mut net = DenseNetwork::build(&spec)?;
        let rows: Vec<ProbeRow> = (0..5)
            .map(|_| ProbeRow {
                x: [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)],
                target: rng.random_range(-1.5..1.5),
                physics: rng.random_range(-1.5..1.5),
            })
            .collect();

        let mut theta = net.get_params();
        let n = rows.len() as f64;
        let (_, analytic) = gradient(&theta, |tape, p| {
            let mut data = None;
            let mut phys = None;
            for r in &rows {
                let pred = net.tape_forward(tape, p, &[r.x[0], r.x[1]]);
                let dg = pred.offset(-r.target);
                let pg = pred.offset(-r.physics);
                let (d2, p2) = (dg * dg, pg * pg);
                data = Some(match data {
                    None => d2,
                    Some(acc) => acc + d2,
                });
                phys = Some(match phys {
                    None => p2,
                    Some(acc) => acc + p2,
                });
            }
            let data = data.expect("probe batch is non-empty");
            let phys = phys.expect("probe batch is non-empty");
            data.scale(1.0 / n) + phys.scale(GRADCHECK_LAMBDA / n)
        });

        let mut base = vec![ActivationPattern::default(); rows.len()];
        for (row, slot) in rows.iter().zip(base.iter_mut()) {
            let mut pattern = ActivationPattern::default();
            net.forward_pattern(&row.x, &mut scratch, &mut pattern);
            *slot = pattern;
        }

        for k in 0..theta.len() {
            let orig = theta[k];
            theta[k] = orig + GRADCHECK_FD_H;
            net.set_params(&theta)?;
            let plus = probe_loss_on_pattern(&net, &rows, &base, GRADCHECK_LAMBDA, &mut scratch);
            theta[k] = orig - GRADCHECK_FD_H;
            net.set_params(&theta)?;
            let minus = probe_loss_on_pattern(&net, &rows, &base, GRADCHECK_LAMBDA, &mut scratch);
            theta[k] = orig;
            match (plus, minus) {
                (Some(fp), Some(fm)) => {
                    let fd = (fp - fm) / (2.0 * GRADCHECK_FD_H);
                    max_gap = max_gap.max(relative_gap(analytic[k], fd, GRADCHECK_FLOOR));
                    checked += 1;
                }
                _ => skipped += 1,
            }
        }
        net.set_params(&theta)?;
    }
    Ok((checked, skipped, max_gap))
}

/// A smooth scalar test function with randomized coefficients, expressible in
/// every payload type the engine differentiates.
fn smooth_expr<S: crate::autodiff::Scalar>(a: &[f64; 10], x: S) -> S {
    let s = (x * S::from_f64(a[1]) + S::from_f64(a[2])).sin() * S::from_f64(a[0]);
    let t = (x * S::from_f64(a[4])).tanh()
        * (x * S::from_f64(a[5]) + S::from_f64(a[6])).cos()
        * S::from_f64(a[3]);
    let e = (x * S::from_f64(a[9])).sin().exp() * S::from_f64(a[8]);
    let c = x.powi(3) * S::from_f64(a[7]);
    s + t + e + c
}

const SECOND_ORDER_FD_H: f64 = 1e-5;

fn second_order_suite(cfg: &GradcheckConfig) -> Result<f64> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6578_7072);
    let mut max_gap = 0.0f64;
    let h = SECOND_ORDER_FD_H;

    for i in 0..cfg.expressions {
        // Random smooth expression: nested-dual second derivative against a
        // central difference of exact first derivatives.
        let mut a = [0.0f64; 10];
        for slot in &mut a {
            *slot = rng.random_range(-1.5..1.5);
        }
        let x = rng.random_range(-2.0..2.0);
        let (_, _, d2) = dual::second_derivative(|xx| smooth_expr(&a, xx), x);
        let dplus = dual::derivative(|xx| smooth_expr(&a, xx), x + h).1;
        let dminus = dual::derivative(|xx| smooth_expr(&a, xx), x - h).1;
        let fd2 = (dplus - dminus) / (2.0 * h);
        max_gap = max_gap.max(relative_gap(d2, fd2, GRADCHECK_FLOOR));

        // Small tanh network, one input: same check through the network path.
        let spec = NetworkSpec::new(1, vec![8, 8], cfg.seed.wrapping_add(1000 + i as u64))
            .with_activation(Activation::Tanh);
        let net = DenseNetwork::build(&spec)?;
        let (_, _, nd2) = dual::second_derivative(|xx| net.eval(&[xx]), x);
        let ndplus = dual::derivative(|xx| net.eval(&[xx]), x + h).1;
        let ndminus = dual::derivative(|xx| net.eval(&[xx]), x - h).1;
        let nfd2 = (ndplus - ndminus) / (2.0 * h);
        max_gap = max_gap.max(relative_gap(nd2, nfd2, GRADCHECK_FLOOR));

        // Two-input tanh network: jet slots against nested duals, both axes.
        let spec2 = NetworkSpec::new(2, vec![8, 8], cfg.seed.wrapping_add(2000 + i as u64))
            .with_activation(Activation::Tanh);
        let net2 = DenseNetwork::build(&spec2)?;
        let (px, pt) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let jet: SpacetimeJet = net2.eval(&[
            SpacetimeJet::space_seeded(px),
            SpacetimeJet::time_seeded(pt),
        ]);
        let along_x = |xx: Dual<Dual<f64>>| net2.eval(&[xx, Dual::constant(Dual::constant(pt))]);
        let (_, dx, dxx) = dual::second_derivative(along_x, px);
        let along_t = |tt: Dual<Dual<f64>>| net2.eval(&[Dual::constant(Dual::constant(px)), tt]);
        let (_, dt, dtt) = dual::second_derivative(along_t, pt);
        max_gap = max_gap.max(relative_gap(jet.dx, dx, GRADCHECK_FLOOR));
        max_gap = max_gap.max(relative_gap(jet.dxx, dxx, GRADCHECK_FLOOR));
        max_gap = max_gap.max(relative_gap(jet.dt, dt, GRADCHECK_FLOOR));
        max_gap = max_gap.max(relative_gap(jet.dtt, dtt, GRADCHECK_FLOOR));
    }
    Ok(max_gap)
}

/// Compare reverse-mode gradients of the displacement loss against central
/// finite differences on randomly initialized production networks, and
/// second derivatives (nested duals and jets) against differences of exact
/// first derivatives on random smooth expressions and small tanh networks.
pub fn run_gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    let (checked, skipped, first) = first_order_suite(cfg)?;
    let second = second_order_suite(cfg)?;
    Ok(GradcheckReport {
        networks: cfg.networks,
        checked_coordinates: checked,
        skipped_coordinates: skipped,
        max_first_order_gap: first,
        expressions: cfg.expressions,
        max_second_order_gap: second,
    })
}
