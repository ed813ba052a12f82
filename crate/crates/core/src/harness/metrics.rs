use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{NrcError, Result};
use crate::linalg::{CMat, CVec, frob_sq};

/// Which side of the link an NRC error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bs,
    Ue,
}

/// One row of harness output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scheme: String,
    pub precoder: String,
    pub param_name: Option<String>,
    pub param_value: Option<f64>,
    pub spectral_efficiency: Option<f64>,
    #[serde(rename = "mse_B")]
    pub mse_b: Option<f64>,
    #[serde(rename = "mse_A")]
    pub mse_a: Option<f64>,
    pub mean_log_term: Option<f64>,
    pub trials: usize,
    pub ci_halfwidth: Option<f64>,
}

/// `||B - B_hat||_F^2 / ||B||_F^2`.
pub fn normalized_mse_bs(truth: &CMat, estimate: &CMat) -> Result<f64> {
    if truth.shape() != estimate.shape() {
        return Err(NrcError::Dimension(
            "BS MSE on matrices of different shape".into(),
        ));
    }
    let denom = frob_sq(truth);
    if denom == 0.0 {
        return Err(NrcError::Parameter(
            "normalized MSE of a zero matrix".into(),
        ));
    }
    Ok(frob_sq(&(truth - estimate)) / denom)
}

/// `||a - a_hat||^2 / ||a||^2` on the diagonals.
pub fn normalized_mse_ue(truth: &CVec, estimate: &CVec) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(NrcError::Dimension(
            "UE MSE on vectors of different length".into(),
        ));
    }
    let denom = truth.norm_squared();
    if denom == 0.0 {
        return Err(NrcError::Parameter(
            "normalized MSE of a zero vector".into(),
        ));
    }
    Ok((truth - estimate).norm_squared() / denom)
}

/// Dispatches on `side`; the UE side compares diagonals only.
pub fn normalized_mse(truth: &CMat, estimate: &CMat, side: Side) -> Result<f64> {
    match side {
        Side::Bs => normalized_mse_bs(truth, estimate),
        Side::Ue => normalized_mse_ue(&truth.diagonal(), &estimate.diagonal()),
    }
}

/// `1 - (tau_u + tau_d + overhead) / T`.
pub fn prefactor(t: usize, pilot_symbols: usize) -> Result<f64> {
    if pilot_symbols >= t {
        return Err(NrcError::PilotBudget(format!(
            "{pilot_symbols} pilot symbols leave nothing of a {t}-symbol interval"
        )));
    }
    Ok(1.0 - pilot_symbols as f64 / t as f64)
}

/// `K (1 - (tau_u + tau_d) / T) E[log2(1 + SINR)]`.
pub fn spectral_efficiency(
    k: usize,
    tau_u: usize,
    tau_d: usize,
    t: usize,
    mean_log_term: f64,
) -> Result<f64> {
    if !(mean_log_term >= 0.0) {
        return Err(NrcError::Parameter(format!(
            "mean log term must be non-negative, got {mean_log_term}"
        )));
    }
    Ok(k as f64 * prefactor(t, tau_u + tau_d)? * mean_log_term)
}

/// Two-sided normal quantile for the given confidence level.
pub fn z_score(confidence: f64) -> f64 {
    let normal = Normal::standard();
    normal.inverse_cdf(0.5 + confidence / 2.0)
}

/// Sample mean and normal-approximation confidence half-width of `values`.
pub fn mean_and_halfwidth(values: &[f64], confidence: f64) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, z_score(confidence) * (var / n as f64).sqrt())
}
