//! Recovering `σ_{t+1}` and the threshold `u` from published one-day VaR figures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::{GpdParams, TailModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub sigma_next: f64,
    pub tail: TailModel,
    /// Root mean square of the fitted-minus-target residuals.
    pub rms: f64,
}

/// Least-squares `(σ, u)` such that `σ F_Z⁻¹(α)` matches `targets` (pairs of
/// level and one-day VaR), with the tail shape `gpd` and mass `fu` held fixed.
///
/// Above the threshold `F_Z⁻¹(α) = u + c(α)` with `c` free of `u`, so the
/// model `σ c(α) + σ u` is linear in `(σ, σu)` and the fit is an ordinary
/// regression.
pub fn calibrate_one_day_var(
    targets: &[(f64, f64)],
    fu: f64,
    gpd: GpdParams,
) -> Result<Calibration> {
    if targets.len() < 2 {
        return Err(Error::invalid("calibration needs at least two levels"));
    }
    // Offsets c(α) from a tail anchored at zero.
    let unit = TailModel::new(0.0, fu, gpd)?;
    let c: Vec<f64> = targets
        .iter()
        .map(|&(a, _)| unit.tail_quantile(a))
        .collect::<Result<_>>()?;
    let n = targets.len() as f64;
    let c_mean = c.iter().sum::<f64>() / n;
    let v_mean = targets.iter().map(|t| t.1).sum::<f64>() / n;
    let sxx: f64 = c.iter().map(|x| (x - c_mean).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("calibration levels must differ".into()));
    }
    let sxy: f64 = c
        .iter()
        .zip(targets)
        .map(|(x, t)| (x - c_mean) * (t.1 - v_mean))
        .sum();
    let sigma = sxy / sxx;
    if !(sigma > 0.0) {
        return Err(Error::Degenerate(format!(
            "calibrated sigma {sigma} is not positive"
        )));
    }
    let u = (v_mean - sigma * c_mean) / sigma;
    let rms = (c
        .iter()
        .zip(targets)
        .map(|(x, t)| (sigma * (u + x) - t.1).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(Calibration {
        sigma_next: sigma,
        tail: TailModel::new(u, fu, gpd)?,
        rms,
    })
}
