//! Command-line front end for the lattice-pinn engine: train the displacement
//! network, benchmark it against the linear baseline, fit PDE surrogates,
//! export the built-in dataset, and self-check the differentiation engine.
//!
//! Exit codes: 0 on success, 1 on usage or data errors, 2 when a run fails
//! numerically (non-finite loss or gradient).

use clap::{Args, Parser, Subcommand};
use lattice_pinn::lattice::{PhysicsForm, ScalerPolicy, TrainConfig};
use lattice_pinn::pde::PdeTrainConfig;
use lattice_pinn::pinn::{PdeKind, PdeProblem};
use lattice_pinn::runs::{
    run_compare, run_export, run_gradcheck, run_pde, run_train, CompareRun, GradcheckConfig,
    PdeRun, TrainRun, PDE_GRID,
};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "lattice-pinn",
    version,
    about = "Physics-informed displacement prediction and PDE surrogates",
    long_about = "Train a physics-regularized displacement network on multi-material beam \
                  data, benchmark it against a closed-form linear baseline, fit heat and wave \
                  equation surrogates, and verify the differentiation engine against finite \
                  differences.\n\nEvery run writes a manifest.json recording hyperparameters, \
                  seeds, dataset fingerprints, and artifact hashes, so results can be \
                  reproduced exactly from the output directory."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the displacement network; writes checkpoint, history, metrics, manifest
    Train(TrainArgs),
    /// Train network and linear baseline on one split and compare them head to head
    Compare(CompareArgs),
    /// Train a heat or wave surrogate and measure it against the analytic solution
    Pde(PdeArgs),
    /// Write the built-in 50-row dataset as CSV
    ExportDataset(ExportArgs),
    /// Check analytic derivatives against finite differences and print the worst gaps
    Gradcheck(GradcheckArgs),
}

/// Flags shared by the displacement-model commands. Every value resolves as
/// CLI flag, then config file, then documented default.
#[derive(Args, Clone)]
struct FitArgs {
    /// Dataset CSV (alloy,strength_mpa,load,displacement_mm); built-in when omitted
    #[arg(long)]
    data: Option<PathBuf>,
    /// Flat key=value config file; flags given on the command line win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Physics regularization weight (default 0.1)
    #[arg(long)]
    lambda: Option<f64>,
    /// Adam learning rate (default 0.001)
    #[arg(long)]
    lr: Option<f64>,
    /// Training epochs (default 1000)
    #[arg(long)]
    epochs: Option<usize>,
    /// Seed for the split and the network init (default 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Train fraction of the split (default 0.8)
    #[arg(long)]
    split: Option<f64>,
    /// Guard added to denominators in the stress proxy (default 1e-7)
    #[arg(long)]
    eps: Option<f64>,
    /// Hidden layer widths, comma separated (default 64,64,32)
    #[arg(long)]
    hidden: Option<String>,
    /// Physics penalty form: predictions (default) or targets
    #[arg(long)]
    physics_form: Option<String>,
    /// Feature/target scaling: standardize (default) or raw
    #[arg(long)]
    scaler: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    fit: FitArgs,
    /// Output directory (default runs/train)
    #[arg(long, default_value = "runs/train")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    fit: FitArgs,
    /// Output directory (default runs/compare)
    #[arg(long, default_value = "runs/compare")]
    out: PathBuf,
    /// Also rerun the head-to-head over this many seeds (0..N) and aggregate medians
    #[arg(long)]
    seeds: Option<usize>,
    /// Also sweep the physics weight over 0, 0.01, 0.1, 1
    #[arg(long)]
    lambdas: bool,
}

#[derive(Args)]
struct PdeArgs {
    /// Equation to fit: heat or wave
    #[arg(long)]
    equation: Option<String>,
    /// Flat key=value config file; flags given on the command line win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Diffusivity alpha (heat, default 0.1) or wave speed c (wave, default 1)
    #[arg(long)]
    coefficient: Option<f64>,
    /// Training epochs (default 2000 heat, 3000 wave)
    #[arg(long)]
    epochs: Option<usize>,
    /// Adam learning rate (default 0.001)
    #[arg(long)]
    lr: Option<f64>,
    /// Seed for sampling and network init (default 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Hidden layer widths, comma separated (default 32,32)
    #[arg(long)]
    hidden: Option<String>,
    /// Interior supervision samples (default 100)
    #[arg(long)]
    n_data: Option<usize>,
    /// Collocation points for the residual term (default 1000)
    #[arg(long)]
    n_colloc: Option<usize>,
    /// Initial-condition samples (default 50)
    #[arg(long)]
    n_init: Option<usize>,
    /// Boundary sample times per end (default 50)
    #[arg(long)]
    n_boundary: Option<usize>,
    /// Weight on the residual term (default 1)
    #[arg(long)]
    physics_weight: Option<f64>,
    /// Evaluation grid resolution per axis (default 50)
    #[arg(long)]
    grid: Option<usize>,
    /// Output directory (default runs/pde)
    #[arg(long, default_value = "runs/pde")]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    /// Output CSV path
    #[arg(long, default_value = "dataset.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Production-architecture networks to probe at first order (default 100)
    #[arg(long)]
    networks: Option<usize>,
    /// Smooth expressions and small nets to probe at second order (default 50)
    #[arg(long)]
    expressions: Option<usize>,
    /// Base seed (default 42)
    #[arg(long)]
    seed: Option<u64>,
}

enum CliError {
    Usage(String),
    Run(lattice_pinn::Error),
}

impl From<lattice_pinn::Error> for CliError {
    fn from(e: lattice_pinn::Error) -> Self {
        CliError::Run(e)
    }
}

/// Keys accepted in config files, across all commands; each command reads the
/// subset that applies to it.
const CONFIG_KEYS: [&str; 20] = [
    "lambda",
    "lr",
    "epochs",
    "seed",
    "split",
    "eps",
    "hidden",
    "physics_form",
    "scaler",
    "equation",
    "coefficient",
    "n_data",
    "n_colloc",
    "n_init",
    "n_boundary",
    "physics_weight",
    "grid",
    "seeds",
    "lambdas",
    "networks",
];

/// A parsed flat key=value config file.
struct Settings(HashMap<String, String>);

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut map = HashMap::new();
        let Some(path) = path else {
            return Ok(Settings(map));
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config {} line {}: expected key=value, got {raw:?}",
                    path.display(),
                    i + 1
                )));
            };
            let key = key.trim().to_string();
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config {} line {}: unknown key {key:?}",
                    path.display(),
                    i + 1
                )));
            }
            map.insert(key, value.trim().to_string());
        }
        Ok(Settings(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::Usage(format!("config key {key}: cannot parse value {raw:?}"))
            }),
        }
    }
}

/// flag > config file > default.
fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn parse_hidden(raw: &str) -> Result<Vec<usize>, CliError> {
    let dims: Result<Vec<usize>, _> = raw.split(',').map(|p| p.trim().parse()).collect();
    match dims {
        Ok(d) if !d.is_empty() && !d.contains(&0) => Ok(d),
        _ => Err(CliError::Usage(format!(
            "hidden layer list must be comma-separated positive integers, got {raw:?}"
        ))),
    }
}

fn resolve_fit(args: &FitArgs) -> Result<(TrainConfig, f64), CliError> {
    let file = Settings::load(args.config.as_deref())?;
    let defaults = TrainConfig::default();
    let hidden = match resolve(args.hidden.clone(), file.get("hidden")?, String::new()) {
        s if s.is_empty() => defaults.hidden_dims.clone(),
        s => parse_hidden(&s)?,
    };
    let physics_form = match resolve(
        args.physics_form.clone(),
        file.get("physics_form")?,
        "predictions".to_string(),
    )
    .as_str()
    {
        "predictions" => PhysicsForm::Predictions,
        "targets" => PhysicsForm::Targets,
        other => {
            return Err(CliError::Usage(format!(
                "physics_form must be predictions or targets, got {other:?}"
            )))
        }
    };
    let scaler = match resolve(
        args.scaler.clone(),
        file.get("scaler")?,
        "standardize".to_string(),
    )
    .as_str()
    {
        "standardize" => ScalerPolicy::Standardize,
        "raw" => ScalerPolicy::Raw,
        other => {
            return Err(CliError::Usage(format!(
                "scaler must be standardize or raw, got {other:?}"
            )))
        }
    };
    let config = TrainConfig {
        lambda: resolve(args.lambda, file.get("lambda")?, defaults.lambda),
        lr: resolve(args.lr, file.get("lr")?, defaults.lr),
        epochs: resolve(args.epochs, file.get("epochs")?, defaults.epochs),
        seed: resolve(args.seed, file.get("seed")?, defaults.seed),
        hidden_dims: hidden,
        scaler_policy: scaler,
        physics_form,
        eps: resolve(args.eps, file.get("eps")?, defaults.eps),
    };
    let split = resolve(args.split, file.get("split")?, 0.8);
    Ok((config, split))
}

fn metrics_line(label: &str, r: &lattice_pinn::metrics::MetricsReport) -> String {
    format!(
        "{label:<18} r2 {:>9.4}   mse {:.6e}   mae {:.6e}   (n={})",
        r.r2, r.mse, r.mae, r.n
    )
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let (config, split) = resolve_fit(&args.fit)?;
    let run = TrainRun {
        data: args.fit.data.clone(),
        out_dir: args.out.clone(),
        train_fraction: split,
        config,
    };
    let summary = run_train(&run)?;
    let b = summary.final_loss;
    println!("trained for {} epochs", summary.epochs_run);
    println!(
        "final loss: total {:.6e} (data {:.6e}, physics {:.6e}, lambda {})",
        b.total, b.data, b.physics, b.lambda
    );
    println!("{}", metrics_line("test", &summary.test));
    println!("{}", metrics_line("full", &summary.full));
    println!("artifacts written to {}", args.out.display());
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let (config, split) = resolve_fit(&args.fit)?;
    let file = Settings::load(args.fit.config.as_deref())?;
    let sweep_seeds = resolve(args.seeds, file.get("seeds")?, 0);
    let lambda_sweep = args.lambdas || file.get::<bool>("lambdas")?.unwrap_or(false);
    let run = CompareRun {
        data: args.fit.data.clone(),
        out_dir: args.out.clone(),
        train_fraction: split,
        config,
        sweep_seeds,
        lambda_sweep,
    };
    let summary = run_compare(&run)?;
    println!("{}", metrics_line("PINN", &summary.pinn));
    println!("{}", metrics_line("LinearRegression", &summary.baseline));
    println!("verdict: {}", summary.verdict);
    if let Some(sweep) = &summary.sweep {
        let mut line = String::new();
        write!(
            line,
            "sweep over {} seeds: median r2 {:.4} vs {:.4}, median mse {:.6e} vs {:.6e}, \
             median mae {:.6e} vs {:.6e} (PINN vs LinearRegression), PINN outright wins {}/{}",
            sweep.seeds,
            sweep.pinn_median.0,
            sweep.baseline_median.0,
            sweep.pinn_median.1,
            sweep.baseline_median.1,
            sweep.pinn_median.2,
            sweep.baseline_median.2,
            sweep.pinn_outright_wins,
            sweep.seeds
        )
        .expect("writing to a string cannot fail");
        println!("{line}");
    }
    println!("artifacts written to {}", args.out.display());
    Ok(())
}

fn cmd_pde(args: &PdeArgs) -> Result<(), CliError> {
    let file = Settings::load(args.config.as_deref())?;
    let equation = resolve(
        args.equation.clone(),
        file.get("equation")?,
        "heat".to_string(),
    );
    let kind = PdeKind::parse(&equation)
        .map_err(|_| CliError::Usage(format!("equation must be heat or wave, got {equation:?}")))?;
    let coefficient = resolve(
        args.coefficient,
        file.get("coefficient")?,
        match kind {
            PdeKind::Heat => 0.1,
            PdeKind::Wave => 1.0,
        },
    );
    let problem = match kind {
        PdeKind::Heat => PdeProblem::heat(coefficient)?,
        PdeKind::Wave => PdeProblem::wave(coefficient)?,
    };
    let defaults = PdeTrainConfig::default_for(kind);
    let hidden = match resolve(args.hidden.clone(), file.get("hidden")?, String::new()) {
        s if s.is_empty() => defaults.hidden_dims.clone(),
        s => parse_hidden(&s)?,
    };
    let config = PdeTrainConfig {
        epochs: resolve(args.epochs, file.get("epochs")?, defaults.epochs),
        lr: resolve(args.lr, file.get("lr")?, defaults.lr),
        seed: resolve(args.seed, file.get("seed")?, defaults.seed),
        hidden_dims: hidden,
        n_data: resolve(args.n_data, file.get("n_data")?, defaults.n_data),
        n_colloc: resolve(args.n_colloc, file.get("n_colloc")?, defaults.n_colloc),
        n_init: resolve(args.n_init, file.get("n_init")?, defaults.n_init),
        n_boundary: resolve(
            args.n_boundary,
            file.get("n_boundary")?,
            defaults.n_boundary,
        ),
        physics_weight: resolve(
            args.physics_weight,
            file.get("physics_weight")?,
            defaults.physics_weight,
        ),
    };
    let grid = resolve(args.grid, file.get("grid")?, PDE_GRID);
    let run = PdeRun {
        problem,
        out_dir: args.out.clone(),
        config,
        grid_resolution: grid,
    };
    let summary = run_pde(&run)?;
    println!("{} equation, coefficient {}", kind.as_str(), coefficient);
    println!(
        "trained for {} epochs, final total loss {:.6e}",
        summary.epochs_run, summary.final_loss.total
    );
    println!(
        "relative L2 error vs analytic solution on {grid}x{grid} grid: {:.6}",
        summary.relative_l2
    );
    println!("artifacts written to {}", args.out.display());
    Ok(())
}

fn cmd_export(args: &ExportArgs) -> Result<(), CliError> {
    run_export(&args.out)?;
    println!("wrote 50 rows to {}", args.out.display());
    Ok(())
}

fn cmd_gradcheck(args: &GradcheckArgs) -> Result<(), CliError> {
    let defaults = GradcheckConfig::default();
    let cfg = GradcheckConfig {
        networks: args.networks.unwrap_or(defaults.networks),
        expressions: args.expressions.unwrap_or(defaults.expressions),
        seed: args.seed.unwrap_or(defaults.seed),
    };
    let report = run_gradcheck(&cfg)?;
    println!(
        "first order: {} networks, {} coordinates checked, {} skipped at relu kinks, \
         max relative error {:.3e}",
        report.networks,
        report.checked_coordinates,
        report.skipped_coordinates,
        report.max_first_order_gap
    );
    println!(
        "second order: {} expressions and small tanh networks, max relative error {:.3e}",
        report.expressions, report.max_second_order_gap
    );
    let ok = report.max_first_order_gap < 1e-4 && report.max_second_order_gap < 1e-3;
    println!("gradcheck {}", if ok { "ok" } else { "FAILED" });
    if !ok {
        return Err(CliError::Usage(
            "derivative check exceeded tolerance".to_string(),
        ));
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Pde(args) => cmd_pde(args),
        Command::ExportDataset(args) => cmd_export(args),
        Command::Gradcheck(args) => cmd_gradcheck(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
