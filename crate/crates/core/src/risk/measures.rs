use std::fmt;

use serde::{Deserialize, Serialize};

use super::poly::PolyP;
use crate::error::{Error, Result};
use crate::evt::NoiseModel;
use crate::garch::GarchParams;
use crate::rng::{open01, stream_rng};

/// A risk evaluation at level `alpha`, `m` days ahead of a known `σ_{t+1}`.
#[derive(Clone, Copy)]
pub struct RiskQuery<'a> {
    alpha: f64,
    m: usize,
    sigma_next: f64,
    params: GarchParams,
    noise: &'a dyn NoiseModel,
}

impl fmt::Debug for RiskQuery<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RiskQuery")
            .field("alpha", &self.alpha)
            .field("m", &self.m)
            .field("sigma_next", &self.sigma_next)
            .field("params", &self.params)
            .field("noise", &self.noise.name())
            .finish()
    }
}

impl<'a> RiskQuery<'a> {
    pub fn new(
        alpha: f64,
        m: usize,
        sigma_next: f64,
        params: GarchParams,
        noise: &'a dyn NoiseModel,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("level {alpha} outside (0, 1)")));
        }
        if alpha < noise.min_level() {
            return Err(Error::LevelBelowTail {
                alpha,
                fu: noise.min_level(),
            });
        }
        if m == 0 {
            return Err(Error::invalid("horizon m must be at least 1"));
        }
        if !(sigma_next > 0.0 && sigma_next.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma_next = {sigma_next} must be positive"
            )));
        }
        Ok(Self {
            alpha,
            m,
            sigma_next,
            params,
            noise,
        })
    }

    pub fn with_horizon(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("horizon m must be at least 1"));
        }
        Ok(Self { m, ..*self })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sigma_next(&self) -> f64 {
        self.sigma_next
    }

    pub fn params(&self) -> &GarchParams {
        &self.params
    }

    pub fn noise(&self) -> &'a dyn NoiseModel {
        self.noise
    }

    fn poly(&self) -> PolyP {
        PolyP::new(self.params.a0(), self.sigma_next * self.sigma_next, self.m)
            .expect("validated query")
    }

    /// `√P(x)`, which is exactly `σ_{t+1}` at `m = 1`.
    fn sqrt_poly(&self, x: f64) -> f64 {
        if self.m == 1 {
            self.sigma_next
        } else {
            self.poly().eval(x).sqrt()
        }
    }
}

/// `σ_{t+1} F_Z⁻¹(α)`.
pub fn one_day_var(q: &RiskQuery) -> f64 {
    q.sigma_next * q.noise.quantile(q.alpha)
}

/// `σ_{t+1} κ̄(α)`.
pub fn one_day_avar(q: &RiskQuery) -> Result<f64> {
    Ok(q.sigma_next * q.noise.kappa(q.alpha)?)
}

/// `F_Z⁻¹(α) √P(a1 F_{Z²}⁻¹(α) + b)`.
pub fn tc_var_single(q: &RiskQuery) -> f64 {
    let x = q.params.a1() * q.noise.sq_quantile(q.alpha) + q.params.b();
    q.noise.quantile(q.alpha) * q.sqrt_poly(x)
}

/// Running sums of `values`; shared by every aggregated quantity so that
/// aggregates agree bit for bit wherever they are produced.
pub fn cumulative_sum(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

fn horizons<T>(q: &RiskQuery, f: impl Fn(&RiskQuery) -> Result<T>) -> Result<Vec<T>> {
    (1..=q.m).map(|k| f(&q.with_horizon(k)?)).collect()
}

/// `Σ_{k≤m}` of the single-loss values.
pub fn tc_var_aggregate(q: &RiskQuery) -> f64 {
    let singles = horizons(q, |h| Ok(tc_var_single(h))).expect("valid horizons");
    *cumulative_sum(&singles).last().expect("m >= 1")
}

/// `κ̄₂(α) P(a1 κ̄₂(α) + b)`: the time-consistent AVaR of the squared loss.
pub fn tc_avar_squared(q: &RiskQuery) -> Result<f64> {
    let k2 = q.noise.kappa2(q.alpha)?;
    if q.m == 1 {
        return Ok(k2 * q.sigma_next * q.sigma_next);
    }
    Ok(k2 * q.poly().eval(q.params.a1() * k2 + q.params.b()))
}

/// `κ̄(α) √P(a1 κ̄₂(α) + b)`.
pub fn avar_upper(q: &RiskQuery) -> Result<f64> {
    let kappa = q.noise.kappa(q.alpha)?;
    if q.m == 1 {
        return Ok(kappa * q.sigma_next);
    }
    let k2 = q.noise.kappa2(q.alpha)?;
    Ok(kappa * q.sqrt_poly(q.params.a1() * k2 + q.params.b()))
}

/// `κ̄(α) J^{m−1} σ_{t+1}`.
pub fn avar_lower(q: &RiskQuery) -> Result<f64> {
    let kappa = q.noise.kappa(q.alpha)?;
    if q.m == 1 {
        return Ok(kappa * q.sigma_next);
    }
    let j = q.noise.j_factor(q.alpha, q.params.a1(), q.params.b())?;
    Ok(kappa * j.powi(q.m as i32 - 1) * q.sigma_next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateBounds {
    /// Sum of single-loss upper bounds; an upper bound by subadditivity.
    pub upper: f64,
    /// Sum of single-loss lower bounds. Not a proven bound on the aggregate.
    pub weak_lower: f64,
}

pub fn avar_aggregate_bounds(q: &RiskQuery) -> Result<AggregateBounds> {
    let upper = horizons(q, avar_upper)?;
    let lower = horizons(q, avar_lower)?;
    Ok(AggregateBounds {
        upper: *cumulative_sum(&upper).last().expect("m >= 1"),
        weak_lower: *cumulative_sum(&lower).last().expect("m >= 1"),
    })
}

/// Industry rule of thumb `VaR_1 √m`.
pub fn sqrt_scaling(var_1day: f64, m: usize) -> f64 {
    if m == 1 {
        var_1day
    } else {
        var_1day * (m as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n_draws: usize,
    pub seed: u64,
    pub stream: u64,
}

/// Generator stream for the cell `(α, m)`, independent of table layout.
pub fn cell_stream(alpha: f64, m: usize) -> u64 {
    alpha.to_bits().wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (m as u64)
}

/// Monte Carlo value of the exact time-consistent AVaR.
///
/// Each `z_j` is a draw of `Z²` conditioned to exceed `F_{Z²}⁻¹(α)`, obtained
/// as `F_{Z²}⁻¹(1 − (1 − α)U)`; the estimate is `κ̄(α)` times the sample mean
/// of `√Q(z_1, …, z_{m−1})`.
pub fn tc_avar_exact_mc(q: &RiskQuery, n_draws: usize, seed: u64) -> Result<McEstimate> {
    let stream = cell_stream(q.alpha, q.m);
    let kappa = q.noise.kappa(q.alpha)?;
    if q.m == 1 {
        return Ok(McEstimate {
            estimate: kappa * q.sigma_next,
            stderr: 0.0,
            n_draws,
            seed,
            stream,
        });
    }
    if n_draws < 2 {
        return Err(Error::invalid("need at least two Monte Carlo draws"));
    }
    let (a0, a1, b) = (q.params.a0(), q.params.a1(), q.params.b());
    let s2 = q.sigma_next * q.sigma_next;
    let tail = 1.0 - q.alpha;
    let mut rng = stream_rng(seed, stream);
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..n_draws {
        let mut acc = 0.0;
        let mut prod = 1.0;
        for _ in 1..q.m {
            acc += a0 * prod;
            let z = q.noise.sq_upper_quantile(tail * open01(&mut rng));
            prod *= a1 * z + b;
        }
        let v = (acc + s2 * prod).sqrt();
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let sd = (m2 / (n_draws - 1) as f64).sqrt();
    Ok(McEstimate {
        estimate: kappa * mean,
        stderr: kappa * sd / (n_draws as f64).sqrt(),
        n_draws,
        seed,
        stream,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evt::StandardNormalNoise;
    use crate::special::{normal_pdf, normal_quantile};
    use approx::assert_relative_eq;

    fn params() -> GarchParams {
        GarchParams::new(2e-7, 0.0451, 0.9531).unwrap()
    }

    fn query(alpha: f64, m: usize, sigma: f64) -> RiskQuery<'static> {
        RiskQuery::new(alpha, m, sigma, params(), &StandardNormalNoise).unwrap()
    }

    #[test]
    fn query_validation() {
        let n = &StandardNormalNoise;
        assert!(RiskQuery::new(1.0, 1, 0.01, params(), n).is_err());
        assert!(RiskQuery::new(0.99, 0, 0.01, params(), n).is_err());
        assert!(RiskQuery::new(0.99, 1, 0.0, params(), n).is_err());
    }

    #[test]
    fn one_day_values() {
        assert_relative_eq!(
            one_day_var(&query(0.975, 1, 1.0)),
            1.959_963_984_540_054,
            epsilon = 1e-9
        );
        assert!((one_day_var(&query(0.99, 1, 0.01)) - 0.023_263_5).abs() < 1e-7);
        let avar = one_day_avar(&query(0.975, 1, 1.0)).unwrap();
        assert!((avar - 2.3378).abs() < 1e-4);
        assert!(avar >= one_day_var(&query(0.975, 1, 1.0)));
    }

    #[test]
    fn horizon_one_coincidences() {
        for &a in &[0.9, 0.975, 0.99] {
            let q = query(a, 1, 0.013);
            assert_eq!(tc_var_single(&q), one_day_var(&q));
            assert_eq!(tc_var_aggregate(&q), one_day_var(&q));
            let avar = one_day_avar(&q).unwrap();
            assert_eq!(avar_upper(&q).unwrap(), avar);
            assert_eq!(avar_lower(&q).unwrap(), avar);
            assert_eq!(tc_avar_exact_mc(&q, 10, 1).unwrap().estimate, avar);
            let bounds = avar_aggregate_bounds(&q).unwrap();
            assert_eq!((bounds.upper, bounds.weak_lower), (avar, avar));
            let k2 = StandardNormalNoise.kappa2(a).unwrap();
            assert_eq!(tc_avar_squared(&q).unwrap(), k2 * 0.013 * 0.013);
        }
    }

    #[test]
    fn two_day_tc_var_scalar() {
        let z = normal_quantile(0.99);
        let s = normal_quantile(0.995).powi(2);
        let expected = z * (2e-7 + 1e-4 * (0.0451 * s + 0.9531)).sqrt();
        let v = tc_var_single(&query(0.99, 2, 0.01));
        assert_relative_eq!(v, expected, max_relative = 1e-12);
        assert!((v - 0.02606).abs() < 1e-5);
    }

    #[test]
    fn two_day_avar_squared_composes_with_kappa2() {
        let c = normal_quantile(0.9875);
        let k2 = 1.0 + 2.0 * c * normal_pdf(c) / 0.025;
        let expected = k2 * (2e-7 + 1e-4 * (0.0451 * k2 + 0.9531));
        assert_relative_eq!(
            tc_avar_squared(&query(0.975, 2, 0.01)).unwrap(),
            expected,
            max_relative = 1e-8
        );
    }

    #[test]
    fn aggregate_is_exact_running_sum() {
        let q = query(0.99, 10, 0.01);
        let mut sum = 0.0;
        for k in 1..=10 {
            sum += tc_var_single(&q.with_horizon(k).unwrap());
        }
        assert_eq!(tc_var_aggregate(&q), sum);
    }

    #[test]
    fn squared_avar_dominates_squared_var() {
        for &a in &[0.975, 0.98, 0.985, 0.99] {
            for m in 1..=10 {
                let q = query(a, m, 0.01);
                assert!(tc_avar_squared(&q).unwrap() >= tc_var_single(&q).powi(2));
            }
        }
    }

    #[test]
    fn bounds_are_ordered() {
        for &a in &[0.975, 0.99] {
            for m in 2..=10 {
                let q = query(a, m, 0.01);
                assert!(avar_lower(&q).unwrap() < avar_upper(&q).unwrap());
            }
        }
    }

    #[test]
    fn sqrt_scaling_examples() {
        assert!((sqrt_scaling(0.0064, 10) - 0.0202).abs() < 5e-5);
        assert!((sqrt_scaling(0.0088, 10) - 0.0278).abs() < 5e-5);
        assert_eq!(sqrt_scaling(0.0123, 1), 0.0123);
    }

    #[test]
    fn mc_is_reproducible_per_cell() {
        let q = query(0.975, 3, 0.01);
        let a = tc_avar_exact_mc(&q, 5000, 7).unwrap();
        let b = tc_avar_exact_mc(&q, 5000, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.stderr > 0.0);
        assert_ne!(cell_stream(0.975, 3), cell_stream(0.975, 4));
        assert_ne!(cell_stream(0.975, 3), cell_stream(0.98, 3));
    }

    #[test]
    fn zero_a0_scales_linearly_in_sigma() {
        let p = GarchParams::new(f64::MIN_POSITIVE, 0.0451, 0.9531).unwrap();
        let n = &StandardNormalNoise;
        let q1 = RiskQuery::new(0.99, 5, 0.01, p, n).unwrap();
        let q2 = RiskQuery::new(0.99, 5, 0.03, p, n).unwrap();
        assert_relative_eq!(
            tc_var_single(&q2),
            3.0 * tc_var_single(&q1),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            avar_upper(&q2).unwrap(),
            3.0 * avar_upper(&q1).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            avar_lower(&q2).unwrap(),
            3.0 * avar_lower(&q1).unwrap(),
            max_relative = 1e-12
        );
    }
}
