use serde::{Deserialize, Serialize};

use super::gpd::{GpdParams, XI_ZERO};
use crate::error::{Error, Result};

/// Peaks-over-threshold tail: above `u` (which carries mass `1 − fu`) the
/// excesses follow `gpd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    u: f64,
    fu: f64,
    gpd: GpdParams,
}

impl TailModel {
    pub fn new(u: f64, fu: f64, gpd: GpdParams) -> Result<Self> {
        if !u.is_finite() {
            return Err(Error::invalid("threshold must be finite"));
        }
        if !(fu > 0.0 && fu < 1.0) {
            return Err(Error::invalid(format!("F(u) = {fu} outside (0, 1)")));
        }
        Ok(Self { u, fu, gpd })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn fu(&self) -> f64 {
        self.fu
    }

    pub fn gpd(&self) -> GpdParams {
        self.gpd
    }

    /// Noise quantile at `alpha ≥ F(u)`.
    pub fn tail_quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha >= self.fu && alpha < 1.0) {
            if alpha < self.fu {
                return Err(Error::LevelBelowTail { alpha, fu: self.fu });
            }
            return Err(Error::invalid(format!("level {alpha} outside (0, 1)")));
        }
        Ok(self.upper_tail_quantile(1.0 - alpha))
    }

    /// Tail quantile at level `1 − p`, for exceedance probabilities `p ≤ 1 − F(u)`.
    pub(crate) fn upper_tail_quantile(&self, p: f64) -> f64 {
        let (xi, beta) = (self.gpd.xi(), self.gpd.beta());
        let ratio = p / (1.0 - self.fu);
        if xi.abs() < XI_ZERO {
            self.u - beta * ratio.ln()
        } else {
            self.u + beta / xi * (-xi * ratio.ln()).exp_m1()
        }
    }

    /// Distribution function above the threshold.
    pub(crate) fn tail_cdf(&self, z: f64) -> f64 {
        self.fu + (1.0 - self.fu) * self.gpd.cdf_unchecked(z - self.u)
    }

    /// `(1 − α)⁻¹ ∫_α^1 F⁻¹(y) dy` for `α ≥ F(u)`, closed form for ξ < 1.
    pub fn tail_mean(&self, alpha: f64) -> Result<f64> {
        let xi = self.gpd.xi();
        if xi >= 1.0 {
            return Err(Error::InfiniteMean { xi });
        }
        let q = self.tail_quantile(alpha)?;
        Ok((q + self.gpd.beta() - xi * self.u) / (1.0 - xi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fitted(u: f64) -> TailModel {
        TailModel::new(u, 0.92, GpdParams::new(0.3376, 0.4609).unwrap()).unwrap()
    }

    #[test]
    fn anchored_at_threshold() {
        let t = fitted(1.3);
        assert_eq!(t.tail_quantile(0.92).unwrap(), 1.3);
        assert!(matches!(
            t.tail_quantile(0.9),
            Err(Error::LevelBelowTail { .. })
        ));
    }

    #[test]
    fn scalar_evaluation_at_99() {
        // u + (0.4609/0.3376)((0.01/0.08)^-0.3376 - 1)
        let t = fitted(0.0);
        let expected = 0.4609 / 0.3376 * ((0.01f64 / 0.08).powf(-0.3376) - 1.0);
        assert_relative_eq!(t.tail_quantile(0.99).unwrap(), expected, epsilon = 1e-12);
        assert!((t.tail_quantile(0.99).unwrap() - 1.3896).abs() < 1e-3);
    }

    #[test]
    fn exponential_branch_is_continuous() {
        let near = TailModel::new(1.0, 0.92, GpdParams::new(1e-9, 0.5).unwrap()).unwrap();
        let small = TailModel::new(1.0, 0.92, GpdParams::new(2e-8, 0.5).unwrap()).unwrap();
        for &a in &[0.93, 0.99, 0.9999] {
            let exp_branch = 1.0 - 0.5 * ((1.0 - a) / 0.08f64).ln();
            assert!((near.tail_quantile(a).unwrap() - exp_branch).abs() < 1e-8);
            assert!((small.tail_quantile(a).unwrap() - exp_branch).abs() < 1e-6);
        }
    }

    #[test]
    fn tail_mean_rejects_infinite_mean() {
        let t = TailModel::new(1.0, 0.9, GpdParams::new(1.2, 0.5).unwrap()).unwrap();
        assert!(matches!(t.tail_mean(0.95), Err(Error::InfiniteMean { .. })));
    }
}
