//! Ordinary least squares in log-log space.

use crate::error::{LabError, Result};

/// A fitted power law `value ≈ exp(intercept) · scale^slope`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest `|log value - (slope log scale + intercept)|` over the samples.
    pub max_abs_residual: f64,
    pub samples: Vec<(f64, f64)>,
}

impl ScalingFit {
    pub fn predict(&self, scale: f64) -> f64 {
        (self.slope * scale.ln() + self.intercept).exp()
    }
}

/// Fit `log value = slope · log scale + intercept`.
///
/// Needs at least three samples with distinct positive scales and
/// positive values.
pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<ScalingFit> {
    if samples.len() < 3 {
        return Err(LabError::InsufficientData {
            needed: 3,
            got: samples.len(),
        });
    }
    for &(s, v) in samples {
        if !(s > 0.0 && s.is_finite()) {
            return Err(LabError::Domain(format!("scale must be positive, got {s}")));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(LabError::Domain(format!("value must be positive, got {v}")));
        }
    }
    let mut scales: Vec<f64> = samples.iter().map(|s| s.0).collect();
    scales.sort_by(f64::total_cmp);
    if scales.windows(2).any(|w| w[0] == w[1]) {
        return Err(LabError::Domain("scales must be distinct".into()));
    }

    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_abs_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    Ok(ScalingFit {
        slope,
        intercept,
        max_abs_residual,
        samples: samples.to_vec(),
    })
}
