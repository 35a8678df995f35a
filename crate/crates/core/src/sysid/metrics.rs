use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Goodness-of-fit summary for one simulated trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fit_percent: f64,
    pub nrmse: f64,
    pub adj_r2: f64,
    pub aicc: f64,
    pub bic: f64,
    pub n_params: usize,
    pub n_points: usize,
}

/// Relative floor on the residual variance inside the log-likelihood, so a
/// perfect fit yields a large negative but finite criterion.
const LIKELIHOOD_FLOOR: f64 = 1e-20;

/// Score a free-run simulation against measurements.
///
/// `n_params` is the model's coefficient count `d`.
pub fn score(y: &[f64], y_hat: &[f64], n_params: usize) -> Result<FitReport> {
    fit_report_with_spread(y, y_hat, n_params, 0.0)
}

/// As [`score`], but the NRMSE denominator never drops below
/// `floor * sqrt(N)`. This keeps segments whose output is (nearly) flat
/// from producing an undefined or exploding NRMSE.
pub(crate) fn fit_report_with_spread(
    y: &[f64],
    y_hat: &[f64],
    n_params: usize,
    floor: f64,
) -> Result<FitReport> {
    if y.len() != y_hat.len() {
        return Err(Error::InvalidArgument(format!(
            "measured has {} samples, simulated {}",
            y.len(),
            y_hat.len()
        )));
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 1, got: n });
    }
    crate::error::ensure_finite("measured output", y)?;
    crate::error::ensure_finite("simulated output", y_hat)?;
    let d = n_params;
    if n <= d + 1 {
        return Err(Error::UndefinedMetric(format!(
            "AICc needs more than {} points, got {n}",
            d + 1
        )));
    }
    let nf = n as f64;
    let mean = y.iter().sum::<f64>() / nf;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let sse: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    let spread = sst.sqrt().max(floor * nf.sqrt());
    if !(spread > 0.0) {
        return Err(Error::UndefinedMetric("measured output is constant".into()));
    }
    let nrmse = sse.sqrt() / spread;
    let fit_percent = 100.0 - 100.0 * nrmse;
    let ss_ref = spread * spread;
    let df = d as f64;
    let adj_r2 = if n > d {
        1.0 - ((nf - 1.0) / (nf - df)) * (sse / ss_ref)
    } else {
        f64::NAN
    };
    let var_floor = LIKELIHOOD_FLOOR * ss_ref / nf;
    let neg2l = nf * (sse / nf).max(var_floor).ln();
    let aicc = neg2l + 2.0 * df + 2.0 * df * (df + 1.0) / (nf - df - 1.0);
    let bic = neg2l + df * nf.ln();
    Ok(FitReport {
        fit_percent,
        nrmse,
        adj_r2,
        aicc,
        bic,
        n_params: d,
        n_points: n,
    })
}
