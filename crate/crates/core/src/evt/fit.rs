//! Threshold choice, GPD maximum likelihood and tail diagnostics.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::gpd::GpdParams;
use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, numerical_hessian, SimplexOptions};

pub const DEFAULT_THRESHOLD_QUANTILE: f64 = 0.92;
/// Fewer exceedances than this triggers a warning.
pub const MIN_RECOMMENDED_EXCEEDANCES: f64 = 50.0;
pub const MIN_GPD_SAMPLE: usize = 30;
/// Mean-excess points with fewer exceedances are flagged.
pub const MIN_MEAN_EXCESS_COUNT: usize = 5;

const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub u: f64,
    pub fu: f64,
    pub n_exceedances: usize,
    pub warnings: Vec<String>,
}

/// Empirical `q`-quantile (type-7 interpolation) and the fraction of the
/// sample at or below it.
pub fn select_threshold(residuals: &[f64], q: f64) -> Result<Threshold> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!(
            "threshold quantile {q} outside (0, 1)"
        )));
    }
    if residuals.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: residuals.len(),
        });
    }
    let mut x = residuals.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let u = x[lo] + (h - lo as f64) * (x[hi] - x[lo]);
    let at_or_below = x.partition_point(|&v| v <= u);
    let mut warnings = Vec::new();
    if (1.0 - q) * (n as f64) < MIN_RECOMMENDED_EXCEEDANCES {
        warnings.push(format!(
            "only about {:.0} exceedances at q = {q}; at least {MIN_RECOMMENDED_EXCEEDANCES} recommended",
            (1.0 - q) * n as f64
        ));
    }
    Ok(Threshold {
        u,
        fu: at_or_below as f64 / n as f64,
        n_exceedances: n - at_or_below,
        warnings,
    })
}

pub fn gpd_log_likelihood(excesses: &[f64], g: &GpdParams) -> f64 {
    excesses.iter().map(|&x| g.log_pdf(x)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpdFit {
    pub params: GpdParams,
    /// Standard errors of (ξ, β) from the observed information, when it is invertible.
    pub stderr: Option<(f64, f64)>,
    pub ci95_xi: Option<(f64, f64)>,
    pub ci95_beta: Option<(f64, f64)>,
    pub loglik: f64,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
}

/// Probability-weighted-moment estimates, the starting point of the MLE.
pub fn pwm_estimates(excesses: &[f64]) -> (f64, f64) {
    let mut x = excesses.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let a0 = x.iter().sum::<f64>() / n;
    let a1 = x
        .iter()
        .enumerate()
        .map(|(i, &v)| (1.0 - (i as f64 + 1.0 - 0.35) / n) * v)
        .sum::<f64>()
        / n;
    let xi = 2.0 - a0 / (a0 - 2.0 * a1);
    let beta = 2.0 * a0 * a1 / (a0 - 2.0 * a1);
    if xi.is_finite() && beta.is_finite() && beta > 0.0 {
        (xi, beta)
    } else {
        (0.1, a0)
    }
}

/// Maximum likelihood fit of a GPD to positive excesses, optimized over
/// `(ξ, ln β)` from the PWM start.
pub fn fit_gpd(excesses: &[f64]) -> Result<GpdFit> {
    if excesses.len() < MIN_GPD_SAMPLE {
        return Err(Error::TooFewObservations {
            needed: MIN_GPD_SAMPLE,
            got: excesses.len(),
        });
    }
    if let Some(x) = excesses.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::invalid(format!(
            "excess {x} is not strictly positive"
        )));
    }
    let first = excesses[0];
    if excesses.iter().all(|&x| x == first) {
        return Err(Error::Degenerate("all excesses are equal".into()));
    }

    let objective = |theta: &[f64]| -> f64 {
        match GpdParams::new(theta[0], theta[1].exp()) {
            Ok(g) => -gpd_log_likelihood(excesses, &g) / excesses.len() as f64,
            Err(_) => f64::INFINITY,
        }
    };
    let (xi0, beta0) = pwm_estimates(excesses);
    let opts = SimplexOptions {
        x_tol: 1e-10,
        f_tol: 1e-13,
        max_iter: 5000,
        initial_step: 0.1,
    };
    let mut best = nelder_mead(objective, &[xi0, beta0.ln()], opts);
    let mut iterations = best.iterations;
    // A second pass from the optimum guards against premature simplex collapse.
    let polish = nelder_mead(
        objective,
        &best.x,
        SimplexOptions {
            initial_step: 0.02,
            ..opts
        },
    );
    iterations += polish.iterations;
    if polish.value <= best.value {
        best.x = polish.x;
        best.value = polish.value;
    }
    best.converged = polish.converged;

    let params = GpdParams::new(best.x[0], best.x[1].exp())?;
    let loglik = gpd_log_likelihood(excesses, &params);
    let stderr = gpd_stderr(excesses, &params);
    Ok(GpdFit {
        params,
        stderr,
        ci95_xi: stderr.map(|(s, _)| (params.xi() - Z_95 * s, params.xi() + Z_95 * s)),
        ci95_beta: stderr.map(|(_, s)| (params.beta() - Z_95 * s, params.beta() + Z_95 * s)),
        loglik,
        n: excesses.len(),
        converged: best.converged,
        iterations,
    })
}

/// Inverse observed information in the natural `(ξ, β)` parameterization.
fn gpd_stderr(excesses: &[f64], g: &GpdParams) -> Option<(f64, f64)> {
    let nll = |p: &[f64]| match GpdParams::new(p[0], p[1]) {
        Ok(g) => -gpd_log_likelihood(excesses, &g),
        Err(_) => f64::INFINITY,
    };
    let h = numerical_hessian(nll, &[g.xi(), g.beta()], 1e-4);
    let info = Matrix2::new(h[0][0], h[0][1], h[1][0], h[1][1]);
    let cov = info.try_inverse()?;
    let (vx, vb) = (cov[(0, 0)], cov[(1, 1)]);
    (vx > 0.0 && vb > 0.0 && vx.is_finite() && vb.is_finite()).then(|| (vx.sqrt(), vb.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanExcessPoint {
    pub u: f64,
    pub mean_excess: f64,
    pub count: usize,
    /// Fewer than [`MIN_MEAN_EXCESS_COUNT`] exceedances.
    pub flagged: bool,
}

pub fn mean_excess_curve(sample: &[f64], thresholds: &[f64]) -> Vec<MeanExcessPoint> {
    thresholds
        .iter()
        .map(|&u| {
            let (sum, count) = sample
                .iter()
                .filter(|&&x| x > u)
                .fold((0.0, 0usize), |(s, c), &x| (s + (x - u), c + 1));
            MeanExcessPoint {
                u,
                mean_excess: if count > 0 {
                    sum / count as f64
                } else {
                    f64::NAN
                },
                count,
                flagged: count < MIN_MEAN_EXCESS_COUNT,
            }
        })
        .collect()
}

/// `(fitted, empirical)` quantile pairs of the exceedances over `u`.
pub fn qq_points(sample: &[f64], u: f64, g: &GpdParams) -> Vec<(f64, f64)> {
    let mut exc: Vec<f64> = sample.iter().copied().filter(|&x| x > u).collect();
    exc.sort_by(f64::total_cmp);
    let k = exc.len() as f64;
    exc.iter()
        .enumerate()
        .map(|(i, &x)| (u + g.upper_quantile(1.0 - (i as f64 + 0.5) / k), x))
        .collect()
}
