use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this |ξ| every GPD formula switches to its exponential limit.
pub const XI_ZERO: f64 = 1e-8;

/// Generalized Pareto law with shape `xi` and scale `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    xi: f64,
    beta: f64,
}

impl GpdParams {
    pub fn new(xi: f64, beta: f64) -> Result<Self> {
        if !xi.is_finite() {
            return Err(Error::invalid("GPD shape must be finite"));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(format!(
                "GPD scale must be positive, got {beta}"
            )));
        }
        Ok(Self { xi, beta })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn is_exponential(&self) -> bool {
        self.xi.abs() < XI_ZERO
    }

    /// Right endpoint of the support, finite only for `xi < 0`.
    pub fn upper_endpoint(&self) -> Option<f64> {
        (self.xi < 0.0 && !self.is_exponential()).then(|| -self.beta / self.xi)
    }

    fn check_support(&self, x: f64) -> Result<()> {
        if !(x >= 0.0) || self.upper_endpoint().is_some_and(|e| x > e) {
            return Err(Error::OutsideSupport { x });
        }
        Ok(())
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        Ok(self.cdf_unchecked(x))
    }

    pub(crate) fn cdf_unchecked(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if self.upper_endpoint().is_some_and(|e| x >= e) {
            return 1.0;
        }
        if self.is_exponential() {
            -(-x / self.beta).exp_m1()
        } else {
            -(-(self.xi * x / self.beta).ln_1p() / self.xi).exp_m1()
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        Ok(self.log_pdf(x).exp())
    }

    /// Log density; `-∞` outside the support.
    pub fn log_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        if self.is_exponential() {
            return -self.beta.ln() - x / self.beta;
        }
        let t = self.xi * x / self.beta;
        if t <= -1.0 {
            return f64::NEG_INFINITY;
        }
        -self.beta.ln() - (1.0 / self.xi + 1.0) * t.ln_1p()
    }

    /// Inverse of the distribution function for `q ∈ (0, 1)`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("quantile level {q} outside (0, 1)")));
        }
        Ok(self.upper_quantile(1.0 - q))
    }

    /// `G⁻¹(1 − p)`, written in terms of the exceedance probability `p`.
    pub fn upper_quantile(&self, p: f64) -> f64 {
        if self.is_exponential() {
            -self.beta * p.ln()
        } else {
            self.beta * (-self.xi * p.ln()).exp_m1() / self.xi
        }
    }

    /// Mean excess `E[X − y | X > y] = (β + ξy)/(1 − ξ)`, finite for ξ < 1.
    pub fn mean_excess(&self, y: f64) -> Option<f64> {
        (self.xi < 1.0).then(|| (self.beta + self.xi * y) / (1.0 - self.xi))
    }
}

/// Excess distribution `y ↦ (F(y + u) − F(u)) / (1 − F(u))` of a law `F`
/// above the threshold `u`.
pub fn excess_cdf<F>(cdf: F, u: f64) -> Result<impl Fn(f64) -> f64>
where
    F: Fn(f64) -> f64,
{
    let fu = cdf(u);
    if !(fu < 1.0) {
        return Err(Error::invalid(format!(
            "F(u) = {fu}: no mass above the threshold"
        )));
    }
    Ok(move |y: f64| {
        if y <= 0.0 {
            0.0
        } else {
            (cdf(y + u) - fu) / (1.0 - fu)
        }
    })
}
