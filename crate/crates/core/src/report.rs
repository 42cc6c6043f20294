//! Artifact plumbing: content fingerprints, JSON/CSV writers, and the run
//! manifest pieces every command records so a run can be reproduced from its
//! output directory alone.

use crate::error::Result;
use crate::lattice::{LatticeSample, SurfaceGrid};
use crate::metrics::MetricsReport;
use crate::pde::FieldGrid;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Hex SHA-256 of a file's contents.
pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Fingerprint of a dataset: the hash of its canonical CSV rendering, so the
/// same rows fingerprint identically regardless of where they came from.
pub fn dataset_fingerprint(rows: &[LatticeSample]) -> String {
    sha256_hex(crate::lattice::to_csv(rows).as_bytes())
}

/// Fingerprint pinning the exact train/test membership of a dataset. Index
/// order within each side is irrelevant.
pub fn split_fingerprint(dataset_fp: &str, train: &[usize], test: &[usize]) -> String {
    let mut tr = train.to_vec();
    let mut te = test.to_vec();
    tr.sort_unstable();
    te.sort_unstable();
    sha256_hex(format!("{dataset_fp}|train:{tr:?}|test:{te:?}").as_bytes())
}

/// Serialize as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Residual rows for one model: actual_mm,predicted_mm,residual_mm,abs_error_mm.
pub fn residuals_csv(actual: &[f64], predicted: &[f64]) -> String {
    let mut out = String::from("actual_mm,predicted_mm,residual_mm,abs_error_mm\n");
    for (a, p) in actual.iter().zip(predicted) {
        let r = p - a;
        out.push_str(&format!("{a},{p},{r},{}\n", r.abs()));
    }
    out
}

/// Side-by-side predictions over a whole dataset, with split membership.
pub fn predictions_csv(
    rows: &[LatticeSample],
    test_indices: &[usize],
    pinn_mm: &[f64],
    baseline_mm: &[f64],
) -> String {
    let mut out = String::from("alloy,strength_mpa,load,split,actual_mm,pinn_mm,baseline_mm\n");
    for (i, row) in rows.iter().enumerate() {
        let split = if test_indices.contains(&i) {
            "test"
        } else {
            "train"
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.alloy,
            row.strength_mpa,
            row.load,
            split,
            row.displacement_mm,
            pinn_mm[i],
            baseline_mm[i]
        ));
    }
    out
}

/// Row-major surface grid as strength_mpa,load,displacement_mm rows.
pub fn surface_csv(grid: &SurfaceGrid) -> String {
    let mut out = String::from("strength_mpa,load,displacement_mm\n");
    let n_loads = grid.loads.len();
    for (i, &s) in grid.strengths.iter().enumerate() {
        for (j, &l) in grid.loads.iter().enumerate() {
            out.push_str(&format!("{s},{l},{}\n", grid.values[i * n_loads + j]));
        }
    }
    out
}

/// PDE field grid as x,t,u_pred,u_exact,abs_error rows.
pub fn field_csv(grid: &FieldGrid) -> String {
    let mut out = String::from("x,t,u_pred,u_exact,abs_error\n");
    let n_t = grid.ts.len();
    for (i, &x) in grid.xs.iter().enumerate() {
        for (j, &t) in grid.ts.iter().enumerate() {
            let p = grid.predicted[i * n_t + j];
            let e = grid.exact[i * n_t + j];
            out.push_str(&format!("{x},{t},{p},{e},{}\n", (p - e).abs()));
        }
    }
    out
}

/// The labeled metrics envelope: the same model evaluated on the held-out
/// rows and on the whole dataset, under explicit keys.
pub fn metrics_json(test: &MetricsReport, full: &MetricsReport) -> serde_json::Value {
    serde_json::json!({
        "test": test.summary_json(),
        "full": full.summary_json(),
    })
}
