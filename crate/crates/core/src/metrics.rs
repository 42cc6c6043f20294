//! Regression quality metrics, residual products, and the two-model
//! comparison verdict.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

fn check_pair(what: &'static str, actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.is_empty() {
        return Err(Error::EmptyInput(what));
    }
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            what,
            left: actual.len(),
            right: predicted.len(),
        });
    }
    Ok(())
}

/// Coefficient of determination, 1 - SS_res / SS_tot.
pub fn r2(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair("r2", actual, predicted)?;
    if actual.len() < 2 {
        return Err(Error::InvalidArgument(
            "r2 needs at least 2 observations".into(),
        ));
    }
    let n = actual.len() as f64;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let ss_res: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Mean squared error.
pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair("mse", actual, predicted)?;
    let n = actual.len() as f64;
    Ok(actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum::<f64>()
        / n)
}

/// Mean absolute error.
pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair("mae", actual, predicted)?;
    let n = actual.len() as f64;
    Ok(actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).abs())
        .sum::<f64>()
        / n)
}

/// Median; the mean of the two central order statistics for even lengths.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("median"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        Ok(sorted[mid])
    } else {
        Ok((sorted[mid - 1] + sorted[mid]) / 2.0)
    }
}

/// Equal-width histogram normalized to integrate to one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Histogram {
    /// bins + 1 edges; for an all-identical input this degenerates to a
    /// single unit-width bin centered on the value.
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Bin residuals into `bins` equal-width cells spanning [min, max]. When all
/// residuals coincide the span is widened to a unit interval around the
/// value so a density still exists; that single-bin case is the documented
/// degenerate behavior.
pub fn error_histogram(residuals: &[f64], bins: usize) -> Result<Histogram> {
    if residuals.is_empty() {
        return Err(Error::EmptyInput("error_histogram"));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument(
            "histogram needs at least 1 bin".into(),
        ));
    }
    let lo = residuals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = residuals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(
            "residuals must be finite to histogram".into(),
        ));
    }
    let (bins, lo, hi) = if lo == hi {
        (1, lo - 0.5, hi + 0.5)
    } else {
        (bins, lo, hi)
    };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &r in residuals {
        let idx = ((r - lo) / width) as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    let n = residuals.len() as f64;
    let densities = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    Ok(Histogram {
        edges,
        densities,
        counts,
    })
}

/// Evaluation summary for one model on one row set; the fingerprint pins the
/// exact rows so reports are only ever compared like for like.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub seed: u64,
    pub split_fingerprint: String,
    pub r2: f64,
    pub mse: f64,
    pub mae: f64,
    pub n: usize,
    /// predicted - actual, in row order.
    pub residuals: Vec<f64>,
}

impl MetricsReport {
    pub fn from_predictions(
        model: &str,
        seed: u64,
        split_fingerprint: &str,
        actual: &[f64],
        predicted: &[f64],
    ) -> Result<Self> {
        Ok(MetricsReport {
            model: model.to_string(),
            seed,
            split_fingerprint: split_fingerprint.to_string(),
            r2: r2(actual, predicted)?,
            mse: mse(actual, predicted)?,
            mae: mae(actual, predicted)?,
            n: actual.len(),
            residuals: predicted.iter().zip(actual).map(|(p, a)| p - a).collect(),
        })
    }

    /// The JSON export shape: the summary fields without the residual list.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "seed": self.seed,
            "split_fingerprint": self.split_fingerprint,
            "r2": self.r2,
            "mse": self.mse,
            "mae": self.mae,
            "n": self.n,
        })
    }
}

/// Which model a comparison favors. `Mixed` means the three metrics
/// disagree; `Tie` means they are all equal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Model(String),
    Mixed,
    Tie,
}

impl Verdict {
    pub fn label(&self) -> &str {
        match self {
            Verdict::Model(name) => name,
            Verdict::Mixed => "mixed",
            Verdict::Tie => "tie",
        }
    }
}

/// Side-by-side comparison of two reports over the same rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Comparison {
    pub a: MetricsReport,
    pub b: MetricsReport,
    /// a minus b, in the order (r2, mse, mae).
    pub deltas: (f64, f64, f64),
    pub verdict: Verdict,
}

/// Compare two reports. A model wins outright only when it has the higher
/// r2 and the lower mse and mae; equal metrics tie, anything else is mixed.
pub fn compare(a: &MetricsReport, b: &MetricsReport) -> Result<Comparison> {
    if a.split_fingerprint != b.split_fingerprint {
        return Err(Error::SplitMismatch {
            left: a.split_fingerprint.clone(),
            right: b.split_fingerprint.clone(),
        });
    }
    let deltas = (a.r2 - b.r2, a.mse - b.mse, a.mae - b.mae);
    let a_wins = a.r2 > b.r2 && a.mse < b.mse && a.mae < b.mae;
    let b_wins = b.r2 > a.r2 && b.mse < a.mse && b.mae < a.mae;
    let verdict = if deltas.0 == 0.0 && deltas.1 == 0.0 && deltas.2 == 0.0 {
        Verdict::Tie
    } else if a_wins {
        Verdict::Model(a.model.clone())
    } else if b_wins {
        Verdict::Model(b.model.clone())
    } else {
        Verdict::Mixed
    };
    Ok(Comparison {
        a: a.clone(),
        b: b.clone(),
        deltas,
        verdict,
    })
}
