//! Convergence-order helpers for Taylor checks.

use crate::spectral::linear_fit;

/// Step ladder used by the Taylor checks.
pub const TAYLOR_STEPS: [f64; 4] = [1e-2, 5e-3, 2.5e-3, 1.25e-3];

/// Least-squares slope of `ln|r|` against `ln t`.
pub fn loglog_slope(ts: &[f64], remainders: &[f64]) -> f64 {
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = remainders.iter().map(|r| r.abs().ln()).collect();
    linear_fit(&xs, &ys).0
}
