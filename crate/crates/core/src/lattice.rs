//! The displacement experiment: the built-in 50-row dataset, CSV import and
//! export, standardization, seeded splitting, the physics-regularized network
//! trainer, and the closed-form linear baseline it is benchmarked against.

use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::net::{DenseNetwork, NetworkSpec};
use crate::optimize::{train_loop, AdamState, StepEval};
use crate::pinn::{self, LossBreakdown};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One simulated cantilever case: an alloy at a given edge load, with the
/// resulting tip displacement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSample {
    pub alloy: String,
    pub strength_mpa: f64,
    pub load: f64,
    pub displacement_mm: f64,
}

impl LatticeSample {
    fn new(alloy: &str, strength_mpa: f64, load: f64, displacement_mm: f64) -> Self {
        LatticeSample {
            alloy: alloy.to_string(),
            strength_mpa,
            load,
            displacement_mm,
        }
    }
}

/// The 50 simulated rows: five alloys, loads 1000 through 10000 in steps of
/// 1000. Values are carried to full printed precision.
pub fn builtin_dataset() -> Vec<LatticeSample> {
    const TABLE: [(&str, f64, [f64; 10]); 5] = [
        (
            "Structural Steel",
            250.0,
            [
                0.003518, 0.0070361, 0.010554, 0.014072, 0.01759, 0.021108, 0.024626, 0.028144,
                0.031662, 0.03518,
            ],
        ),
        (
            "AA6061",
            276.0,
            [
                0.01014, 0.02028, 0.030419, 0.040559, 0.050699, 0.060839, 0.070978, 0.081118,
                0.091258, 0.1014,
            ],
        ),
        (
            "AA7075",
            503.0,
            [
                0.0098541, 0.019708, 0.029562, 0.039417, 0.049271, 0.059125, 0.068979, 0.078833,
                0.088687, 0.098541,
            ],
        ),
        (
            "Ti6Al4V",
            880.0,
            [
                0.0066571, 0.013314, 0.019971, 0.026628, 0.033286, 0.039943, 0.0466, 0.053257,
                0.059914, 0.066571,
            ],
        ),
        (
            "Inconel718",
            1034.0,
            [
                0.0034893, 0.0069786, 0.010468, 0.013957, 0.017446, 0.020936, 0.024425, 0.027914,
                0.031404, 0.034893,
            ],
        ),
    ];
    let mut rows = Vec::with_capacity(50);
    for (alloy, strength, displacements) in TABLE {
        for (i, &d) in displacements.iter().enumerate() {
            let load = 1000.0 * (i + 1) as f64;
            rows.push(LatticeSample::new(alloy, strength, load, d));
        }
    }
    rows
}

pub const CSV_HEADER: &str = "alloy,strength_mpa,load,displacement_mm";

/// Render rows in the exporter format; floats use the shortest
/// representation that parses back to the same value.
pub fn to_csv(rows: &[LatticeSample]) -> String {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.alloy, r.strength_mpa, r.load, r.displacement_mm
        ));
    }
    out
}

/// Parse the exporter format. Errors carry 1-based line numbers.
pub fn parse_csv(text: &str) -> Result<Vec<LatticeSample>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == CSV_HEADER => {}
        _ => {
            return Err(Error::MissingHeader {
                expected: CSV_HEADER,
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::CsvFormat {
                line: lineno,
                message: format!("expected 4 comma-separated fields, found {}", fields.len()),
            });
        }
        let num = |name: &str, raw: &str| -> Result<f64> {
            let v: f64 = raw.trim().parse().map_err(|e| Error::CsvFormat {
                line: lineno,
                message: format!("bad {name} value {raw:?}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(Error::CsvFormat {
                    line: lineno,
                    message: format!("{name} must be finite, got {raw:?}"),
                });
            }
            Ok(v)
        };
        let strength = num("strength_mpa", fields[1])?;
        let load = num("load", fields[2])?;
        let displacement = num("displacement_mm", fields[3])?;
        if displacement <= 0.0 {
            return Err(Error::CsvFormat {
                line: lineno,
                message: format!("displacement_mm must be positive, got {displacement}"),
            });
        }
        rows.push(LatticeSample::new(fields[0], strength, load, displacement));
    }
    Ok(rows)
}

/// Read a dataset CSV from disk.
pub fn load_csv(path: &Path) -> Result<Vec<LatticeSample>> {
    parse_csv(&std::fs::read_to_string(path)?)
}

/// Write a dataset CSV to disk.
pub fn write_csv(path: &Path, rows: &[LatticeSample]) -> Result<()> {
    std::fs::write(path, to_csv(rows))?;
    Ok(())
}

/// Seeded uniform-random train/test partition.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            seed: 42,
        }
    }
}

/// Indices of (train, test) rows: a shuffled partition taking the first
/// ceil(fraction * n) positions as train. Deterministic per seed.
pub fn split_indices(n: usize, cfg: &SplitConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 rows to split, got {n}"
        )));
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction must lie strictly between 0 and 1, got {}",
            cfg.train_fraction
        )));
    }
    let n_train = ((cfg.train_fraction * n as f64).ceil() as usize)
        .min(n - 1)
        .max(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    order.shuffle(&mut rng);
    let test = order.split_off(n_train);
    Ok((order, test))
}

/// Partition rows into (train, test) per the config.
pub fn split(
    rows: &[LatticeSample],
    cfg: &SplitConfig,
) -> Result<(Vec<LatticeSample>, Vec<LatticeSample>)> {
    let (itr, ite) = split_indices(rows.len(), cfg)?;
    let take = |ix: &[usize]| ix.iter().map(|&i| rows[i].clone()).collect();
    Ok((take(&itr), take(&ite)))
}

/// Per-column z-score transform with frozen statistics. Columns with zero
/// spread keep an effective std of 1 so the transform stays invertible.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StandardScaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl StandardScaler {
    /// Fit on rows of equal width; stds are population standard deviations.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let width = match rows.first() {
            None => return Err(Error::EmptyInput("StandardScaler::fit")),
            Some(r) => r.len(),
        };
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidArgument(
                "scaler rows must share a positive width".into(),
            ));
        }
        let n = rows.len() as f64;
        let mut means = vec![0.0; width];
        for r in rows {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut stds = vec![0.0; width];
        for r in rows {
            for j in 0..width {
                let d = r[j] - means[j];
                stds[j] += d * d;
            }
        }
        for s in &mut stds {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Ok(StandardScaler { means, stds })
    }

    /// An identity transform of the given width.
    pub fn identity(width: usize) -> Self {
        StandardScaler {
            means: vec![0.0; width],
            stds: vec![1.0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.width());
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn inverse_transform(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.width());
        z.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }

    /// Single-column convenience for target scaling.
    pub fn transform1(&self, x: f64) -> f64 {
        (x - self.means[0]) / self.stds[0]
    }

    pub fn inverse1(&self, z: f64) -> f64 {
        z * self.stds[0] + self.means[0]
    }
}

/// Whether training standardizes features and targets (the default) or runs
/// on raw values (diagnostic only; raw scales stall Adam at these rates).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalerPolicy {
    Standardize,
    Raw,
}

/// Which quantity the physics penalty compares against the normalized stress
/// proxy. `Predictions` is the gradient-bearing reading and the default;
/// `Targets` reproduces the constant-penalty reading, which leaves the
/// gradient purely data-driven, and is kept as an ablation switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhysicsForm {
    Predictions,
    Targets,
}

/// Hyperparameters for the physics-regularized run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub lr: f64,
    pub epochs: usize,
    /// Network initialization seed.
    pub seed: u64,
    pub hidden_dims: Vec<usize>,
    pub scaler_policy: ScalerPolicy,
    pub physics_form: PhysicsForm,
    /// Guard added to denominators in the stress proxy and its normalizer.
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.1,
            lr: 0.001,
            epochs: 1000,
            seed: 42,
            hidden_dims: vec![64, 64, 32],
            scaler_policy: ScalerPolicy::Standardize,
            physics_form: PhysicsForm::Predictions,
            eps: 1e-7,
        }
    }
}

/// A trained network bundled with everything needed to map raw
/// (strength, load) to a displacement in mm.
#[derive(Clone, Debug)]
pub struct TrainedPinn {
    pub net: DenseNetwork,
    pub input_scaler: StandardScaler,
    pub target_scaler: StandardScaler,
    /// Frozen training-split statistics of the stress proxy.
    pub physics_mean: f64,
    pub physics_std: f64,
    pub config: TrainConfig,
}

impl TrainedPinn {
    pub fn predict_mm(&self, strength_mpa: f64, load: f64) -> f64 {
        let x = self.input_scaler.transform(&[strength_mpa, load]);
        let z = self
            .net
            .forward(&x)
            .expect("trained network accepts two features");
        self.target_scaler.inverse1(z)
    }

    /// Write the full prediction bundle (network plus scalers and frozen
    /// physics statistics) as JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bundle = PinnBundle {
            network: self.net.to_checkpoint(),
            input_scaler: self.input_scaler.clone(),
            target_scaler: self.target_scaler.clone(),
            physics_mean: self.physics_mean,
            physics_std: self.physics_std,
            config: self.config.clone(),
        };
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), &bundle)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let bundle: PinnBundle = serde_json::from_reader(std::io::BufReader::new(file))?;
        Ok(TrainedPinn {
            net: bundle.network.into_network()?,
            input_scaler: bundle.input_scaler,
            target_scaler: bundle.target_scaler,
            physics_mean: bundle.physics_mean,
            physics_std: bundle.physics_std,
            config: bundle.config,
        })
    }
}

/// On-disk form of a trained displacement model.
#[derive(Serialize, Deserialize)]
struct PinnBundle {
    network: crate::net::Checkpoint,
    input_scaler: StandardScaler,
    target_scaler: StandardScaler,
    physics_mean: f64,
    physics_std: f64,
    config: TrainConfig,
}

/// Train the displacement network on the given rows. Inputs and targets are
/// standardized per the policy, the stress proxy is computed on raw features
/// and normalized with statistics frozen from these rows, and the network is
/// optimized full-batch with Adam.
pub fn train_pinn(rows: &[LatticeSample], config: &TrainConfig) -> Result<TrainedPinn> {
    train_pinn_with_history(rows, config).map(|(model, _)| model)
}

/// Train and also return the per-epoch loss history.
pub fn train_pinn_with_history(
    rows: &[LatticeSample],
    config: &TrainConfig,
) -> Result<(TrainedPinn, Vec<LossBreakdown>)> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("train_pinn rows"));
    }
    if config.lambda < 0.0 || !config.lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda must be finite and non-negative, got {}",
            config.lambda
        )));
    }
    let n = rows.len();
    let features: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.strength_mpa, r.load]).collect();
    let targets: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.displacement_mm]).collect();
    let (input_scaler, target_scaler) = match config.scaler_policy {
        ScalerPolicy::Standardize => (
            StandardScaler::fit(&features)?,
            StandardScaler::fit(&targets)?,
        ),
        ScalerPolicy::Raw => (StandardScaler::identity(2), StandardScaler::identity(1)),
    };
    let xs: Vec<Vec<f64>> = features.iter().map(|f| input_scaler.transform(f)).collect();
    let ts: Vec<f64> = targets
        .iter()
        .map(|t| target_scaler.transform1(t[0]))
        .collect();

    // Stress proxy on raw features, standardized with frozen statistics.
    let proxy: Vec<f64> = rows
        .iter()
        .map(|r| pinn::physics_term(r.strength_mpa, r.load, config.eps))
        .collect();
    let (physics_mean, physics_std) = pinn::physics_stats(&proxy)?;
    let pnorm = pinn::normalize_with(&proxy, physics_mean, physics_std, config.eps);

    let spec = NetworkSpec::new(2, config.hidden_dims.clone(), config.seed);
    let mut net = DenseNetwork::build(&spec)?;
    let mut params = net.get_params();
    let mut state = AdamState::new(params.len(), config.lr)?;

    let nf = n as f64;
    let lambda = config.lambda;
    let physics_form = config.physics_form;
    // The physics gap for the Targets form never moves, so it is a constant
    // of the run.
    let target_physics_gap = ts
        .iter()
        .zip(&pnorm)
        .map(|(t, p)| (t - p) * (t - p))
        .sum::<f64>()
        / nf;

    let mut adjoints = Vec::new();
    let history = train_loop(&mut params, &mut state, config.epochs, |theta, _epoch| {
        let tape = Tape::new();
        let leaves = tape.leaves(theta);
        let mark = tape.len();
        let mut grad = vec![0.0; theta.len()];
        let mut data = 0.0;
        let mut physics = 0.0;
        for i in 0..n {
            let y = net.tape_forward(&tape, &leaves, &xs[i]);
            let yhat = y.value();
            let data_gap = yhat - ts[i];
            let physics_gap = yhat - pnorm[i];
            data += data_gap * data_gap / nf;
            let seed = match physics_form {
                PhysicsForm::Predictions => {
                    physics += physics_gap * physics_gap / nf;
                    2.0 * (data_gap + lambda * physics_gap) / nf
                }
                PhysicsForm::Targets => 2.0 * data_gap / nf,
            };
            tape.backward_seeded(&[(y, seed)], &mut adjoints);
            for (g, a) in grad.iter_mut().zip(&adjoints) {
                *g += a;
            }
            tape.rewind_to(mark);
        }
        if physics_form == PhysicsForm::Targets {
            physics = target_physics_gap;
        }
        Ok(StepEval {
            breakdown: LossBreakdown::new(data, physics, 0.0, 0.0, lambda),
            grad,
        })
    })?;

    net.set_params(&params)?;
    let model = TrainedPinn {
        net,
        input_scaler,
        target_scaler,
        physics_mean,
        physics_std,
        config: config.clone(),
    };
    Ok((model, history))
}

/// Closed-form least squares displacement = w_s * strength + w_l * load + b.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LinearModel {
    pub w_strength: f64,
    pub w_load: f64,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict_mm(&self, strength_mpa: f64, load: f64) -> f64 {
        self.w_strength * strength_mpa + self.w_load * load + self.intercept
    }
}

/// Solve a 3x3 linear system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::SingularSystem);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let lead = a[col];
        for row in col + 1..3 {
            let f = a[row][col] / lead[col];
            for (dst, src) in a[row][col..].iter_mut().zip(&lead[col..]) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Ordinary least squares of displacement on (strength, load) with an
/// intercept, via the normal equations.
pub fn train_baseline(rows: &[LatticeSample]) -> Result<LinearModel> {
    if rows.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "baseline fit needs at least 3 rows, got {}",
            rows.len()
        )));
    }
    let n = rows.len() as f64;
    let (mut ss, mut sl, mut s1) = (0.0, 0.0, 0.0);
    let (mut css, mut csl, mut cll) = (0.0, 0.0, 0.0);
    let (mut ys, mut yl, mut y1) = (0.0, 0.0, 0.0);
    for r in rows {
        let (s, l, y) = (r.strength_mpa, r.load, r.displacement_mm);
        ss += s;
        sl += l;
        s1 += 1.0;
        css += s * s;
        csl += s * l;
        cll += l * l;
        ys += y * s;
        yl += y * l;
        y1 += y;
    }
    debug_assert_eq!(s1, n);
    let a = [[css, csl, ss], [csl, cll, sl], [ss, sl, s1]];
    let x = solve3(a, [ys, yl, y1])?;
    Ok(LinearModel {
        w_strength: x[0],
        w_load: x[1],
        intercept: x[2],
    })
}

/// Anything that predicts a displacement in mm from raw features.
pub trait DisplacementModel {
    fn predict_mm(&self, strength_mpa: f64, load: f64) -> f64;
}

impl DisplacementModel for LinearModel {
    fn predict_mm(&self, strength_mpa: f64, load: f64) -> f64 {
        LinearModel::predict_mm(self, strength_mpa, load)
    }
}

impl DisplacementModel for TrainedPinn {
    fn predict_mm(&self, strength_mpa: f64, load: f64) -> f64 {
        TrainedPinn::predict_mm(self, strength_mpa, load)
    }
}

pub const DEFAULT_STRENGTH_RANGE: (f64, f64) = (250.0, 1034.0);
pub const DEFAULT_LOAD_RANGE: (f64, f64) = (1000.0, 10000.0);

/// A row-major prediction grid: `values[i * loads.len() + j]` is the
/// prediction at `(strengths[i], loads[j])`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub strengths: Vec<f64>,
    pub loads: Vec<f64>,
    pub values: Vec<f64>,
}

/// Evaluate a model over a regular strength x load grid.
pub fn predict_surface<M: DisplacementModel>(
    model: &M,
    strength_range: (f64, f64),
    load_range: (f64, f64),
    resolution: usize,
) -> Result<SurfaceGrid> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "surface resolution must be at least 2, got {resolution}"
        )));
    }
    if strength_range.0 >= strength_range.1 || load_range.0 >= load_range.1 {
        return Err(Error::InvalidArgument(
            "surface ranges must be non-degenerate".into(),
        ));
    }
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..resolution)
            .map(|i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64)
            .collect()
    };
    let strengths = axis(strength_range);
    let loads = axis(load_range);
    let mut values = Vec::with_capacity(resolution * resolution);
    for &s in &strengths {
        for &l in &loads {
            values.push(model.predict_mm(s, l));
        }
    }
    Ok(SurfaceGrid {
        strengths,
        loads,
        values,
    })
}
