//! Loss constructors: data mismatch, the algebraic physics penalty with its
//! batch normalization, PDE residual losses for the heat and wave problems,
//! initial/boundary penalties, and collocation sampling. Everything here is a
//! pure function of its inputs.

use crate::autodiff::{Scalar, SpacetimeJet};
use crate::error::{Error, Result};
use crate::net::DenseNetwork;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-epoch loss terms. `physics` is stored unweighted; the weighting enters
/// the total, which always equals data + lambda * physics + initial + boundary.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub data: f64,
    pub physics: f64,
    pub initial: f64,
    pub boundary: f64,
    pub lambda: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(data: f64, physics: f64, initial: f64, boundary: f64, lambda: f64) -> Self {
        LossBreakdown {
            data,
            physics,
            initial,
            boundary,
            lambda,
            total: data + lambda * physics + initial + boundary,
        }
    }

    pub fn data_only(data: f64) -> Self {
        Self::new(data, 0.0, 0.0, 0.0, 0.0)
    }
}

/// Mean squared error between predictions and targets.
pub fn data_loss(preds: &[f64], targets: &[f64]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("data_loss"));
    }
    if preds.len() != targets.len() {
        return Err(Error::LengthMismatch {
            what: "data_loss",
            left: preds.len(),
            right: targets.len(),
        });
    }
    let n = preds.len() as f64;
    Ok(preds
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// The algebraic stress proxy load / (strength + eps). The eps guard keeps a
/// zero strength finite.
pub fn physics_term(strength: f64, load: f64, eps: f64) -> f64 {
    load / (strength + eps)
}

/// Batch mean and population (divide by N) standard deviation.
pub fn physics_stats(terms: &[f64]) -> Result<(f64, f64)> {
    if terms.is_empty() {
        return Err(Error::EmptyInput("physics_stats"));
    }
    let n = terms.len() as f64;
    let mean = terms.iter().sum::<f64>() / n;
    let var = terms.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Standardize against frozen statistics: (P - mu) / (sigma + eps).
pub fn normalize_with(terms: &[f64], mu: f64, sigma: f64, eps: f64) -> Vec<f64> {
    terms.iter().map(|t| (t - mu) / (sigma + eps)).collect()
}

/// Standardize a batch against its own mean and population standard
/// deviation. A constant batch maps to all zeros through the eps guard.
pub fn normalize_physics(terms: &[f64], eps: f64) -> Result<Vec<f64>> {
    let (mu, sigma) = physics_stats(terms)?;
    Ok(normalize_with(terms, mu, sigma, eps))
}

/// Data term plus the physics penalty mean((pred_i - p_norm_i)^2), weighted
/// into the total by lambda. The penalty compares predictions (not targets)
/// against the normalized physics term, which is the reading that actually
/// steers training; see `lattice::TrainConfig` for the ablation switch.
pub fn lattice_total_loss(
    preds: &[f64],
    targets: &[f64],
    physics_normalized: &[f64],
    lambda: f64,
) -> Result<LossBreakdown> {
    if lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    if preds.len() != physics_normalized.len() {
        return Err(Error::LengthMismatch {
            what: "lattice_total_loss physics",
            left: preds.len(),
            right: physics_normalized.len(),
        });
    }
    let data = data_loss(preds, targets)?;
    let physics = data_loss(preds, physics_normalized)?;
    Ok(LossBreakdown::new(data, physics, 0.0, 0.0, lambda))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdeKind {
    Heat,
    Wave,
}

impl PdeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PdeKind::Heat => "heat",
            PdeKind::Wave => "wave",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "heat" => Ok(PdeKind::Heat),
            "wave" => Ok(PdeKind::Wave),
            other => Err(Error::InvalidArgument(format!(
                "unknown pde kind \"{other}\", expected heat or wave"
            ))),
        }
    }
}

/// Named closed-form profiles for initial conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Zero,
    SinPi,
}

impl Profile {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::SinPi => (std::f64::consts::PI * x).sin(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Zero => "zero",
            Profile::SinPi => "sin_pi",
        }
    }
}

/// A 1D evolution problem on a rectangle: the heat equation u_t = alpha u_xx
/// or the wave equation u_tt = c^2 u_xx, with fixed (zero) ends.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PdeProblem {
    pub kind: PdeKind,
    /// alpha for heat, c for wave.
    pub coefficient: f64,
    pub x_range: (f64, f64),
    pub t_range: (f64, f64),
    pub initial_profile: Profile,
    /// Only the wave problem uses an initial velocity.
    pub initial_velocity: Profile,
}

impl PdeProblem {
    pub fn new(
        kind: PdeKind,
        coefficient: f64,
        x_range: (f64, f64),
        t_range: (f64, f64),
    ) -> Result<Self> {
        if !(coefficient > 0.0 && coefficient.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "pde coefficient must be positive and finite, got {coefficient}"
            )));
        }
        if x_range.0 >= x_range.1 || t_range.0 >= t_range.1 {
            return Err(Error::InvalidArgument(
                "pde domain ranges must be non-degenerate".into(),
            ));
        }
        Ok(PdeProblem {
            kind,
            coefficient,
            x_range,
            t_range,
            initial_profile: Profile::SinPi,
            initial_velocity: Profile::Zero,
        })
    }

    /// Heat problem on the unit square with u0(x) = sin(pi x).
    pub fn heat(alpha: f64) -> Result<Self> {
        Self::new(PdeKind::Heat, alpha, (0.0, 1.0), (0.0, 1.0))
    }

    /// Wave problem on the unit square with u0(x) = sin(pi x), v0 = 0.
    pub fn wave(c: f64) -> Result<Self> {
        Self::new(PdeKind::Wave, c, (0.0, 1.0), (0.0, 1.0))
    }

    /// The separable closed-form solution for the canonical initial data:
    /// heat decays as sin(pi x) exp(-pi^2 alpha t), the wave is the standing
    /// pattern sin(pi x) cos(pi c t). Undefined for other initial profiles.
    pub fn analytic_solution(&self) -> Result<AnalyticField> {
        if self.initial_profile != Profile::SinPi || self.initial_velocity != Profile::Zero {
            return Err(Error::InvalidArgument(
                "closed-form solution is only known for u0 = sin(pi x), v0 = 0".into(),
            ));
        }
        Ok(AnalyticField {
            kind: self.kind,
            coefficient: self.coefficient,
        })
    }
}

/// Anything that can be evaluated as a field u(x, t) with derivative slots.
/// Networks and closed-form solutions both implement this, so residuals run
/// through one shared code path.
pub trait PdeField {
    fn eval_jet(&self, x: SpacetimeJet, t: SpacetimeJet) -> SpacetimeJet;

    /// Plain field value.
    fn at(&self, x: f64, t: f64) -> f64 {
        self.eval_jet(SpacetimeJet::constant(x), SpacetimeJet::constant(t))
            .v
    }
}

impl PdeField for DenseNetwork {
    fn eval_jet(&self, x: SpacetimeJet, t: SpacetimeJet) -> SpacetimeJet {
        self.eval(&[x, t])
    }
}

/// Closed-form reference field built from the same jet arithmetic the
/// networks evaluate under.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticField {
    kind: PdeKind,
    coefficient: f64,
}

impl PdeField for AnalyticField {
    fn eval_jet(&self, x: SpacetimeJet, t: SpacetimeJet) -> SpacetimeJet {
        let pi = std::f64::consts::PI;
        let sx = (x * SpacetimeJet::from_f64(pi)).sin();
        match self.kind {
            PdeKind::Heat => {
                let decay = (-(t * SpacetimeJet::from_f64(pi * pi * self.coefficient))).exp();
                sx * decay
            }
            PdeKind::Wave => {
                let ct = (t * SpacetimeJet::from_f64(pi * self.coefficient)).cos();
                sx * ct
            }
        }
    }
}

/// Heat operator applied to one evaluated jet: u_t - alpha u_xx.
#[inline]
pub fn heat_residual_of(u: SpacetimeJet, alpha: f64) -> f64 {
    u.dt - alpha * u.dxx
}

/// Wave operator applied to one evaluated jet: u_tt - c^2 u_xx.
#[inline]
pub fn wave_residual_of(u: SpacetimeJet, c: f64) -> f64 {
    u.dtt - c * c * u.dxx
}

/// Pointwise heat residual of any field.
pub fn heat_residual_at<F: PdeField>(field: &F, x: f64, t: f64, alpha: f64) -> f64 {
    let u = field.eval_jet(SpacetimeJet::space_seeded(x), SpacetimeJet::time_seeded(t));
    heat_residual_of(u, alpha)
}

/// Pointwise wave residual of any field.
pub fn wave_residual_at<F: PdeField>(field: &F, x: f64, t: f64, c: f64) -> f64 {
    let u = field.eval_jet(SpacetimeJet::space_seeded(x), SpacetimeJet::time_seeded(t));
    wave_residual_of(u, c)
}

/// Mean squared heat residual over the collocation set.
pub fn heat_residual_loss<F: PdeField>(
    field: &F,
    colloc: &CollocationSet,
    alpha: f64,
) -> Result<f64> {
    if colloc.points.is_empty() {
        return Err(Error::EmptyInput("heat_residual_loss collocation"));
    }
    let n = colloc.points.len() as f64;
    Ok(colloc
        .points
        .iter()
        .map(|&(x, t)| {
            let r = heat_residual_at(field, x, t, alpha);
            r * r
        })
        .sum::<f64>()
        / n)
}

/// Mean squared wave residual over the collocation set.
pub fn wave_residual_loss<F: PdeField>(field: &F, colloc: &CollocationSet, c: f64) -> Result<f64> {
    if colloc.points.is_empty() {
        return Err(Error::EmptyInput("wave_residual_loss collocation"));
    }
    let n = colloc.points.len() as f64;
    Ok(colloc
        .points
        .iter()
        .map(|&(x, t)| {
            let r = wave_residual_at(field, x, t, c);
            r * r
        })
        .sum::<f64>()
        / n)
}

/// Initial-condition penalty at t = 0: mean (u - u0)^2 plus mean (u_t - v0)^2.
pub fn wave_init_loss<F: PdeField>(
    field: &F,
    x_samples: &[f64],
    u0: Profile,
    v0: Profile,
) -> Result<f64> {
    if x_samples.is_empty() {
        return Err(Error::EmptyInput("wave_init_loss samples"));
    }
    let n = x_samples.len() as f64;
    let mut value_term = 0.0;
    let mut velocity_term = 0.0;
    for &x in x_samples {
        let u = field.eval_jet(SpacetimeJet::constant(x), SpacetimeJet::time_seeded(0.0));
        let dv = u.v - u0.eval(x);
        let dt = u.dt - v0.eval(x);
        value_term += dv * dv;
        velocity_term += dt * dt;
    }
    Ok(value_term / n + velocity_term / n)
}

/// Fixed-end penalty: mean u(x0, t)^2 plus mean u(x1, t)^2.
pub fn boundary_loss<F: PdeField>(field: &F, t_samples: &[f64], x_ends: (f64, f64)) -> Result<f64> {
    if t_samples.is_empty() {
        return Err(Error::EmptyInput("boundary_loss samples"));
    }
    let n = t_samples.len() as f64;
    let mut left = 0.0;
    let mut right = 0.0;
    for &t in t_samples {
        let a = field.at(x_ends.0, t);
        let b = field.at(x_ends.1, t);
        left += a * a;
        right += b * b;
    }
    Ok(left / n + right / n)
}

/// Uniform pseudo-random points in the problem's open rectangle.
#[derive(Clone, Debug)]
pub struct CollocationSet {
    pub points: Vec<(f64, f64)>,
    pub domain: ((f64, f64), (f64, f64)),
    pub seed: u64,
}

/// Draw n i.i.d. uniform collocation points, deterministic per seed.
pub fn sample_collocation(problem: &PdeProblem, n: usize, seed: u64) -> Result<CollocationSet> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "collocation sample count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (xr, tr) = (problem.x_range, problem.t_range);
    let points = (0..n)
        .map(|_| (rng.random_range(xr.0..xr.1), rng.random_range(tr.0..tr.1)))
        .collect();
    Ok(CollocationSet {
        points,
        domain: (xr, tr),
        seed,
    })
}

/// Uniform samples of a single interval, for initial and boundary sample
/// positions; deterministic per seed.
pub fn sample_interval(range: (f64, f64), n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "interval sample count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| rng.random_range(range.0..range.1)).collect())
}
