//! Noise laws for the GARCH innovations `Z`.
//!
//! A [`NoiseModel`] exposes the quantities the risk formulas consume: the
//! quantile of `Z`, the quantile of `Z²` (through the symmetry identity
//! `F_{Z²}⁻¹(α) = F_Z⁻¹((1+α)/2)²`) and the three normalized tail integrals
//! `κ̄`, `κ̄₂` and `J`.

use std::fmt::Debug;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::tail::TailModel;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_endpoint_singular, QuadOptions};
use crate::rng::{open01, stream_rng};
use crate::special::{normal_cdf, normal_pdf, normal_quantile, normal_upper_quantile};

/// Draws and tolerance of the unit-variance check run on construction.
pub const MOMENT_CHECK_DRAWS: usize = 100_000;
pub const MOMENT_CHECK_TOL: f64 = 0.02;
const MOMENT_CHECK_SEED: u64 = 0x005E_ED0F_2019;

pub trait NoiseModel: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn cdf(&self, z: f64) -> f64;

    /// `F_Z⁻¹(α)` for `α ∈ (0, 1)`.
    fn quantile(&self, alpha: f64) -> f64;

    /// `F_Z⁻¹(1 − p)`; implementations keep precision for small `p`.
    fn upper_quantile(&self, p: f64) -> f64 {
        self.quantile(1.0 - p)
    }

    /// `F_{Z²}⁻¹(α)`.
    fn sq_quantile(&self, alpha: f64) -> f64 {
        self.sq_upper_quantile(1.0 - alpha)
    }

    /// `F_{Z²}⁻¹(1 − p)`.
    fn sq_upper_quantile(&self, p: f64) -> f64 {
        let q = self.upper_quantile(0.5 * p);
        q * q
    }

    /// Shape of a power-law upper tail (0 for light tails). Governs which tail
    /// integrals exist and the endpoint substitution used to compute them.
    fn tail_index(&self) -> f64 {
        0.0
    }

    /// Smallest level at which the model's tail formulas apply.
    fn min_level(&self) -> f64 {
        0.0
    }

    /// `κ̄(α) = (1 − α)⁻¹ ∫_α^1 F_Z⁻¹(y) dy`.
    fn kappa(&self, alpha: f64) -> Result<f64> {
        kappa_by_quadrature(self, alpha)
    }

    /// `κ̄₂(α) = (1 − α)⁻¹ ∫_α^1 F_{Z²}⁻¹(y) dy`.
    fn kappa2(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        let xi = self.tail_index();
        if xi >= 0.5 {
            return Err(Error::SquaredTailUndefined { xi });
        }
        let tail = 1.0 - alpha;
        let power = (2.0 / (1.0 - 2.0 * xi.max(0.0))).max(2.0);
        let integral =
            integrate_endpoint_singular(|p| self.sq_upper_quantile(p), tail, power, quad_opts())?;
        Ok(integral / tail)
    }

    /// `J(α; a1, b) = (1 − α)⁻¹ ∫_α^1 √(a1 F_{Z²}⁻¹(y) + b) dy`.
    fn j_factor(&self, alpha: f64, a1: f64, b: f64) -> Result<f64> {
        check_level(alpha)?;
        if !(a1 >= 0.0 && b >= 0.0) {
            return Err(Error::invalid("J factor needs a1 >= 0 and b >= 0"));
        }
        if a1 == 0.0 {
            return Ok(b.sqrt());
        }
        let xi = self.tail_index();
        if xi >= 1.0 {
            return Err(Error::InfiniteMean { xi });
        }
        let tail = 1.0 - alpha;
        let power = (2.0 / (1.0 - xi.max(0.0))).max(2.0);
        let integral = integrate_endpoint_singular(
            |p| (a1 * self.sq_upper_quantile(p) + b).sqrt(),
            tail,
            power,
            quad_opts(),
        )?;
        Ok(integral / tail)
    }

    /// One draw of `Z`; inverse-cdf sampling unless overridden.
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.quantile(open01(rng))
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions::default()
}

fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("level {alpha} outside (0, 1)")))
    }
}

/// `κ̄` by quadrature of the upper quantile function; used where no closed form applies.
pub fn kappa_by_quadrature<N: NoiseModel + ?Sized>(noise: &N, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    let xi = noise.tail_index();
    if xi >= 1.0 {
        return Err(Error::InfiniteMean { xi });
    }
    let tail = 1.0 - alpha;
    let power = (2.0 / (1.0 - xi.max(0.0))).max(2.0);
    let integral =
        integrate_endpoint_singular(|p| noise.upper_quantile(p), tail, power, quad_opts())?;
    Ok(integral / tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub mean: f64,
    pub variance: f64,
    pub draws: usize,
    pub passed: bool,
}

/// Sample mean and variance of the model's own sampler; passes when
/// `|mean| ≤ tol` and `|variance − 1| ≤ tol`.
pub fn moment_check<N: NoiseModel + ?Sized>(noise: &N, draws: usize, tol: f64) -> MomentCheck {
    let mut rng = stream_rng(MOMENT_CHECK_SEED, 0);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let z = noise.sample(&mut rng);
        sum += z;
        sum_sq += z * z;
    }
    let n = draws as f64;
    let mean = sum / n;
    let variance = (sum_sq - n * mean * mean) / (n - 1.0);
    MomentCheck {
        mean,
        variance,
        draws,
        passed: mean.abs() <= tol && (variance - 1.0).abs() <= tol,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StandardNormalNoise;

impl NoiseModel for StandardNormalNoise {
    fn name(&self) -> &'static str {
        "normal"
    }

    fn cdf(&self, z: f64) -> f64 {
        normal_cdf(z)
    }

    fn quantile(&self, alpha: f64) -> f64 {
        normal_quantile(alpha)
    }

    fn upper_quantile(&self, p: f64) -> f64 {
        normal_upper_quantile(p)
    }

    /// `φ(Φ⁻¹(α)) / (1 − α)`.
    fn kappa(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        Ok(normal_pdf(normal_upper_quantile(1.0 - alpha)) / (1.0 - alpha))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        StandardNormal.sample(rng)
    }
}

/// How the body of the spliced law is built from the residuals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodyMode {
    /// Empirical law of `{±|z_i|}`: symmetric by construction.
    #[default]
    Symmetrized,
    /// Raw empirical body between the mirrored tails. The `Z²` quantile still
    /// uses the symmetry identity, so it is only approximate in this mode.
    Asymmetric,
}

/// Largest allowed gap between `F(u)` and the residuals' own distribution
/// function at `u`.
const SPLICE_CONSISTENCY_TOL: f64 = 0.05;

/// Empirical body on `[-u, u]` with a GPD upper tail above `u` and its mirror
/// image below `-u`.
#[derive(Debug, Clone)]
pub struct SplicedNoise {
    tail: TailModel,
    /// `(level, value)` knots of the piecewise-linear body quantile, strictly
    /// increasing in both coordinates, from `(1 − F(u), −u)` to `(F(u), u)`.
    knots: Vec<(f64, f64)>,
    mode: BodyMode,
    moments: MomentCheck,
}

impl SplicedNoise {
    pub fn new(residuals: &[f64], tail: TailModel, mode: BodyMode) -> Result<Self> {
        let (u, fu) = (tail.u(), tail.fu());
        Self::check_tail(&tail)?;
        if residuals.len() < 2 || residuals.iter().any(|z| !z.is_finite()) {
            return Err(Error::invalid("need at least two finite residuals"));
        }
        let mut sample: Vec<f64> = match mode {
            BodyMode::Symmetrized => residuals.iter().flat_map(|z| [z.abs(), -z.abs()]).collect(),
            BodyMode::Asymmetric => residuals.to_vec(),
        };
        sample.sort_by(f64::total_cmp);
        let n = sample.len() as f64;

        let below = sample.partition_point(|&z| z <= u) as f64 / n;
        if (below - fu).abs() > SPLICE_CONSISTENCY_TOL {
            return Err(Error::InconsistentTail(format!(
                "residual distribution at u = {u} is {below:.4}, tail model says {fu:.4}"
            )));
        }

        let mut knots = vec![(1.0 - fu, -u)];
        for (k, &z) in sample.iter().enumerate() {
            let level = (k as f64 + 0.5) / n;
            let last = knots[knots.len() - 1];
            // Values outside (-u, u) are clipped away so the splice stays
            // strictly increasing.
            if level > last.0 && level < fu && z > last.1 && z < u {
                knots.push((level, z));
            }
        }
        knots.push((fu, u));
        Ok(Self::assemble(tail, knots, mode))
    }

    /// Tail-only model for callers without residuals: the body is uniform on
    /// `[-u, u]`. Tail quantities (levels ≥ F(u)) are unaffected.
    pub fn from_tail(tail: TailModel) -> Result<Self> {
        Self::check_tail(&tail)?;
        let knots = vec![(1.0 - tail.fu(), -tail.u()), (tail.fu(), tail.u())];
        Ok(Self::assemble(tail, knots, BodyMode::Symmetrized))
    }

    fn check_tail(tail: &TailModel) -> Result<()> {
        if !(tail.u() > 0.0) {
            return Err(Error::InconsistentTail(format!(
                "threshold must be positive, got {}",
                tail.u()
            )));
        }
        if !(tail.fu() > 0.5) {
            return Err(Error::InconsistentTail(format!(
                "F(u) = {} leaves no room for a symmetric body",
                tail.fu()
            )));
        }
        Ok(())
    }

    fn assemble(tail: TailModel, knots: Vec<(f64, f64)>, mode: BodyMode) -> Self {
        let mut noise = Self {
            tail,
            knots,
            mode,
            moments: MomentCheck {
                mean: f64::NAN,
                variance: f64::NAN,
                draws: 0,
                passed: false,
            },
        };
        noise.moments = moment_check(&noise, MOMENT_CHECK_DRAWS, MOMENT_CHECK_TOL);
        noise
    }

    pub fn tail(&self) -> &TailModel {
        &self.tail
    }

    pub fn mode(&self) -> BodyMode {
        self.mode
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Result of the unit-variance check run at construction.
    pub fn moments(&self) -> &MomentCheck {
        &self.moments
    }

    fn body_quantile(&self, alpha: f64) -> f64 {
        let i = self
            .knots
            .partition_point(|&(l, _)| l <= alpha)
            .clamp(1, self.knots.len() - 1);
        let (l0, v0) = self.knots[i - 1];
        let (l1, v1) = self.knots[i];
        v0 + (alpha - l0) / (l1 - l0) * (v1 - v0)
    }

    fn body_cdf(&self, z: f64) -> f64 {
        let i = self
            .knots
            .partition_point(|&(_, v)| v <= z)
            .clamp(1, self.knots.len() - 1);
        let (l0, v0) = self.knots[i - 1];
        let (l1, v1) = self.knots[i];
        l0 + (z - v0) / (v1 - v0) * (l1 - l0)
    }
}

impl NoiseModel for SplicedNoise {
    fn name(&self) -> &'static str {
        "spliced"
    }

    fn cdf(&self, z: f64) -> f64 {
        let u = self.tail.u();
        if z >= u {
            self.tail.tail_cdf(z)
        } else if z <= -u {
            1.0 - self.tail.tail_cdf(-z)
        } else {
            self.body_cdf(z)
        }
    }

    fn quantile(&self, alpha: f64) -> f64 {
        let fu = self.tail.fu();
        if alpha >= fu {
            self.tail.upper_tail_quantile(1.0 - alpha)
        } else if alpha <= 1.0 - fu {
            -self.tail.upper_tail_quantile(alpha)
        } else {
            self.body_quantile(alpha)
        }
    }

    fn upper_quantile(&self, p: f64) -> f64 {
        if p <= 1.0 - self.tail.fu() {
            self.tail.upper_tail_quantile(p)
        } else {
            self.quantile(1.0 - p)
        }
    }

    fn tail_index(&self) -> f64 {
        self.tail.gpd().xi()
    }

    fn min_level(&self) -> f64 {
        self.tail.fu()
    }

    /// Closed form above the threshold, quadrature below it.
    fn kappa(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        if alpha >= self.tail.fu() {
            self.tail.tail_mean(alpha)
        } else {
            kappa_by_quadrature(self, alpha)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evt::gpd::GpdParams;
    use crate::special::normal_upper_quantile;
    use approx::assert_relative_eq;

    fn normal_residuals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn spliced() -> SplicedNoise {
        let z = normal_residuals(5000, 11);
        let u = normal_quantile(0.92);
        let tail = TailModel::new(u, 0.92, GpdParams::new(0.1, 0.45).unwrap()).unwrap();
        SplicedNoise::new(&z, tail, BodyMode::Symmetrized).unwrap()
    }

    #[test]
    fn normal_kappa_at_975() {
        let k = StandardNormalNoise.kappa(0.975).unwrap();
        assert_relative_eq!(
            k,
            normal_pdf(1.959_963_984_540_054) / 0.025,
            epsilon = 1e-12
        );
        assert!((k - 2.3378).abs() < 1e-4);
    }

    #[test]
    fn normal_kappa_quadrature_matches_closed_form() {
        for &a in &[0.9, 0.975, 0.995] {
            let closed = StandardNormalNoise.kappa(a).unwrap();
            let quad = kappa_by_quadrature(&StandardNormalNoise, a).unwrap();
            assert_relative_eq!(closed, quad, max_relative = 1e-9);
        }
    }

    #[test]
    fn normal_sq_quantile_at_99() {
        let v = StandardNormalNoise.sq_quantile(0.99);
        assert_relative_eq!(v, 2.575_829_303_548_901f64.powi(2), max_relative = 1e-12);
        assert!((v - 6.6349).abs() < 1e-4);
    }

    #[test]
    fn normal_kappa2_matches_analytic_identity() {
        let a = 0.975;
        let c = normal_upper_quantile((1.0 - a) / 2.0);
        let analytic = 1.0 + 2.0 * c * normal_pdf(c) / (1.0 - a);
        let quad = StandardNormalNoise.kappa2(a).unwrap();
        assert!((quad - analytic).abs() < 1e-8, "{quad} vs {analytic}");
    }

    #[test]
    fn j_factor_constant_integrand() {
        assert_eq!(
            StandardNormalNoise.j_factor(0.975, 0.0, 0.9531).unwrap(),
            0.9531f64.sqrt()
        );
    }

    #[test]
    fn j_factor_bracketed_by_jensen() {
        let (a1, b) = (0.0451, 0.9531);
        let j = StandardNormalNoise.j_factor(0.975, a1, b).unwrap();
        let k2 = StandardNormalNoise.kappa2(0.975).unwrap();
        assert!(j > b.sqrt());
        assert!(j * j <= a1 * k2 + b + 1e-8);
    }

    #[test]
    fn normal_moments() {
        let m = moment_check(&StandardNormalNoise, MOMENT_CHECK_DRAWS, MOMENT_CHECK_TOL);
        assert!(m.passed, "{m:?}");
    }

    #[test]
    fn spliced_anchors_and_round_trips() {
        let n = spliced();
        let t = *n.tail();
        assert_eq!(n.quantile(0.92), t.u());
        for &a in &[0.93, 0.975, 0.999] {
            assert_eq!(n.quantile(a), t.tail_quantile(a).unwrap());
        }
        for &a in &[0.5, 0.9, 0.95, 0.99] {
            assert!((n.cdf(n.quantile(a)) - a).abs() < 1e-10, "level {a}");
        }
        for &a in &[0.01, 0.07, 0.3] {
            assert!((n.cdf(n.quantile(a)) - a).abs() < 1e-10, "level {a}");
        }
    }

    #[test]
    fn spliced_is_symmetric_and_strictly_increasing() {
        let n = spliced();
        let levels: Vec<f64> = (1..1000).map(|i| i as f64 / 1000.0).collect();
        let q: Vec<f64> = levels.iter().map(|&a| n.quantile(a)).collect();
        assert!(q.windows(2).all(|w| w[1] > w[0]));
        for &a in &levels {
            assert!((n.quantile(a) + n.quantile(1.0 - a)).abs() < 1e-9);
        }
    }

    #[test]
    fn spliced_excess_matches_gpd() {
        let n = spliced();
        let t = *n.tail();
        let fe = crate::evt::gpd::excess_cdf(|z| n.cdf(z), t.u()).unwrap();
        for &y in &[0.01, 0.5, 2.0, 10.0] {
            assert!((fe(y) - t.gpd().cdf(y).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn spliced_kappa2_requires_finite_squared_tail() {
        let z = normal_residuals(2000, 3);
        let u = normal_quantile(0.92);
        let tail = TailModel::new(u, 0.92, GpdParams::new(0.6, 0.45).unwrap()).unwrap();
        let n = SplicedNoise::new(&z, tail, BodyMode::Symmetrized).unwrap();
        assert!(matches!(
            n.kappa2(0.975),
            Err(Error::SquaredTailUndefined { .. })
        ));
        assert!(n.kappa(0.975).is_ok());
    }

    #[test]
    fn spliced_kappa_closed_form_matches_quadrature() {
        let n = spliced();
        for &a in &[0.95, 0.975, 0.99] {
            let closed = n.kappa(a).unwrap();
            let quad = kappa_by_quadrature(&n, a).unwrap();
            assert!(((closed - quad) / closed).abs() < 1e-8);
        }
    }

    #[test]
    fn inconsistent_threshold_rejected() {
        let z = normal_residuals(2000, 5);
        let tail = TailModel::new(0.2, 0.92, GpdParams::new(0.1, 0.45).unwrap()).unwrap();
        assert!(matches!(
            SplicedNoise::new(&z, tail, BodyMode::Symmetrized),
            Err(Error::InconsistentTail(_))
        ));
    }

    #[test]
    fn asymmetric_body_keeps_the_splice() {
        let z = normal_residuals(5000, 17);
        let u = normal_quantile(0.92);
        let tail = TailModel::new(u, 0.92, GpdParams::new(0.1, 0.45).unwrap()).unwrap();
        let n = SplicedNoise::new(&z, tail, BodyMode::Asymmetric).unwrap();
        assert_eq!(n.quantile(0.92), u);
        assert!((n.quantile(0.08) + u).abs() < 1e-12);
        assert!((n.cdf(n.quantile(0.4)) - 0.4).abs() < 1e-10);
    }
}
