//! Central finite differences, the independent oracle side of every
//! derivative check. Deliberately knows nothing about tapes or duals.

/// Two-sided difference quotient of a scalar function.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Two-sided difference quotient per coordinate.
pub fn central_grad(f: impl Fn(&[f64]) -> f64, params: &[f64], h: f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let hi = f(&p);
            p[i] = orig - h;
            let lo = f(&p);
            p[i] = orig;
            (hi - lo) / (2.0 * h)
        })
        .collect()
}

/// Relative gap with an absolute floor: when both magnitudes sit under
/// `floor`, the values count as agreeing, which keeps dead-unit zeros from
/// manufacturing 0/0 blowups.
pub fn relative_gap(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < floor {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
