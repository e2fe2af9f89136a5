//! Brute-force checks of the closed forms: empirical (A)VaR estimators,
//! simulated backward compositions, an `m = 2` quadrature, and the static
//! versus time-consistent VaR comparison.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::NoiseModel;
use crate::garch::GarchParams;
use crate::quadrature::{integrate_endpoint_singular, QuadOptions};
use crate::risk::{
    avar_lower, avar_upper, one_day_avar, one_day_var, tc_avar_exact_mc, tc_avar_squared,
    tc_var_aggregate, tc_var_single, RiskQuery,
};
use crate::rng::stream_rng;

pub const DEFAULT_DRAWS: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 20_190_801;
/// Agreement checks fail at or above this `|z|`.
pub const Z_FAIL: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub estimate: f64,
    pub stderr: f64,
    pub n_draws: usize,
    pub seed: u64,
    pub target: Option<f64>,
    pub z_score: Option<f64>,
}

impl McReport {
    pub fn new(estimate: f64, stderr: f64, n_draws: usize, seed: u64, target: Option<f64>) -> Self {
        Self {
            estimate,
            stderr,
            n_draws,
            seed,
            target,
            z_score: target.map(|t| z_score(estimate, stderr, t)),
        }
    }
}

/// `(estimate − target)/stderr`, with a zero-variance estimate scoring 0 only on exact agreement.
pub fn z_score(estimate: f64, stderr: f64, target: f64) -> f64 {
    let diff = estimate - target;
    if stderr > 0.0 {
        diff / stderr
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn order_index(n: usize, alpha: f64) -> usize {
    // Smallest k with k/n ≥ α; the epsilon absorbs α·n landing just above an integer.
    ((alpha * n as f64 - 1e-9).ceil() as usize).clamp(1, n) - 1
}

/// Left-continuous empirical quantile: the smallest order statistic `x_(k)` with `k/n ≥ α`.
pub fn mc_var_empirical(samples: &[f64], alpha: f64) -> f64 {
    assert!(!samples.is_empty(), "empirical quantile of an empty sample");
    let mut x = samples.to_vec();
    let k = order_index(x.len(), alpha);
    *x.select_nth_unstable_by(k, f64::total_cmp).1
}

/// Mean of the samples strictly above [`mc_var_empirical`]; the maximum if none are.
pub fn mc_avar_empirical(samples: &[f64], alpha: f64) -> f64 {
    let var = mc_var_empirical(samples, alpha);
    tail_mean_above(samples, var)
}

fn tail_mean_above(samples: &[f64], var: f64) -> f64 {
    let (sum, count) = samples
        .iter()
        .filter(|&&x| x > var)
        .fold((0.0, 0usize), |(s, c), &x| (s + x, c + 1));
    if count == 0 {
        samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        sum / count as f64
    }
}

/// Empirical quantile with a standard error from the asymptotic law
/// `√(α(1−α)/n) / f`, the density `f` estimated from order-statistic spacings.
fn quantile_with_stderr(samples: &mut [f64], alpha: f64) -> (f64, f64) {
    samples.sort_unstable_by(f64::total_cmp);
    let n = samples.len();
    let k = order_index(n, alpha);
    let h = ((n as f64).sqrt().round() as usize).max(1);
    let lo = k.saturating_sub(h);
    let hi = (k + h).min(n - 1);
    let spread = samples[hi] - samples[lo];
    let stderr = if spread > 0.0 {
        let density = (hi - lo) as f64 / (n as f64 * spread);
        (alpha * (1.0 - alpha) / n as f64).sqrt() / density
    } else {
        0.0
    };
    (samples[k], stderr)
}

/// Empirical AVaR with the standard error of its influence function
/// `VaR + (Y − VaR)⁺/(1 − α)`.
fn avar_with_stderr(samples: &[f64], alpha: f64) -> (f64, f64) {
    let var = mc_var_empirical(samples, alpha);
    let avar = tail_mean_above(samples, var);
    let n = samples.len() as f64;
    let infl = |y: f64| var + (y - var).max(0.0) / (1.0 - alpha);
    let mean = samples.iter().map(|&y| infl(y)).sum::<f64>() / n;
    let ss = samples
        .iter()
        .map(|&y| (infl(y) - mean).powi(2))
        .sum::<f64>();
    (avar, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

fn draws(noise: &dyn NoiseModel, n: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    (0..n).map(|_| noise.sample(&mut rng)).collect()
}

fn check_draws(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::invalid("need at least two Monte Carlo draws"))
    } else {
        Ok(())
    }
}

/// `σ_{t+2}² = a0 + σ²(a1 z² + b)` given the draw `z = Z_{t+1}`.
fn sigma2_sq(p: &GarchParams, sigma_next: f64, z: f64) -> f64 {
    p.a0() + sigma_next * sigma_next * (p.a1() * z * z + p.b())
}

// Stream identifiers of the individual checks.
const S_VAR: u64 = 1;
const S_AGG: u64 = 2;
const S_AVAR_SQ: u64 = 3;
const S_DEMO_1: u64 = 4;
const S_DEMO_2: u64 = 5;
const S_ONE_DAY: u64 = 6;
const S_AXIOMS: u64 = 7;

/// Two-day time-consistent VaR by simulation: the empirical `α`-quantile of
/// the one-day VaR `σ_{t+2}(Z_{t+1}) F_Z⁻¹(α)` seen from `t + 1`.
pub fn composed_var_check(
    params: &GarchParams,
    sigma_next: f64,
    alpha: f64,
    noise: &dyn NoiseModel,
    n_draws: usize,
    seed: u64,
) -> Result<McReport> {
    let q = RiskQuery::new(alpha, 2, sigma_next, *params, noise)?;
    check_draws(n_draws)?;
    let qa = noise.quantile(alpha);
    let mut inner: Vec<f64> = draws(noise, n_draws, seed, S_VAR)
        .into_iter()
        .map(|z| sigma2_sq(params, sigma_next, z).sqrt() * qa)
        .collect();
    let (est, se) = quantile_with_stderr(&mut inner, alpha);
    Ok(McReport::new(
        est,
        se,
        n_draws,
        seed,
        Some(tc_var_single(&q)),
    ))
}

/// Two-day aggregate by simulation: the empirical `α`-quantile of
/// `L_{t+1} + σ_{t+2} F_Z⁻¹(α)`.
pub fn composed_var_aggregate_check(
    params: &GarchParams,
    sigma_next: f64,
    alpha: f64,
    noise: &dyn NoiseModel,
    n_draws: usize,
    seed: u64,
) -> Result<McReport> {
    let q = RiskQuery::new(alpha, 2, sigma_next, *params, noise)?;
    check_draws(n_draws)?;
    let qa = noise.quantile(alpha);
    let mut inner: Vec<f64> = draws(noise, n_draws, seed, S_AGG)
        .into_iter()
        .map(|z| sigma_next * z + sigma2_sq(params, sigma_next, z).sqrt() * qa)
        .collect();
    let (est, se) = quantile_with_stderr(&mut inner, alpha);
    Ok(McReport::new(
        est,
        se,
        n_draws,
        seed,
        Some(tc_var_aggregate(&q)),
    ))
}

/// Two-day time-consistent AVaR of the squared loss by simulation: the
/// empirical AVaR of `κ̄₂ σ_{t+2}²`.
pub fn composed_avar_sq_check(
    params: &GarchParams,
    sigma_next: f64,
    alpha: f64,
    noise: &dyn NoiseModel,
    n_draws: usize,
    seed: u64,
) -> Result<McReport> {
    let q = RiskQuery::new(alpha, 2, sigma_next, *params, noise)?;
    check_draws(n_draws)?;
    let k2 = noise.kappa2(alpha)?;
    let inner: Vec<f64> = draws(noise, n_draws, seed, S_AVAR_SQ)
        .into_iter()
        .map(|z| k2 * sigma2_sq(params, sigma_next, z))
        .collect();
    let (est, se) = avar_with_stderr(&inner, alpha);
    Ok(McReport::new(
        est,
        se,
        n_draws,
        seed,
        Some(tc_avar_squared(&q)?),
    ))
}

/// One-day VaR and AVaR of `σ_{t+1} Z` from raw draws.
pub fn one_day_checks(
    params: &GarchParams,
    sigma_next: f64,
    alpha: f64,
    noise: &dyn NoiseModel,
    n_draws: usize,
    seed: u64,
) -> Result<(McReport, McReport)> {
    let q = RiskQuery::new(alpha, 1, sigma_next, *params, noise)?;
    check_draws(n_draws)?;
    let mut x: Vec<f64> = draws(noise, n_draws, seed, S_ONE_DAY)
        .into_iter()
        .map(|z| sigma_next * z)
        .collect();
    let (aest, ase) = avar_with_stderr(&x, alpha);
    let (vest, vse) = quantile_with_stderr(&mut x, alpha);
    Ok((
        McReport::new(vest, vse, n_draws, seed, Some(one_day_var(&q))),
        McReport::new(aest, ase, n_draws, seed, Some(one_day_avar(&q)?)),
    ))
}

/// Deterministic value of the two-day exact AVaR,
/// `κ̄(α)/(1−α) ∫_α^1 √(a0 + σ²(a1 F_{Z²}⁻¹(y) + b)) dy`.
pub fn tc_avar_m2_quadrature(
    params: &GarchParams,
    sigma_next: f64,
    alpha: f64,
    noise: &dyn NoiseModel,
) -> Result<f64> {
    RiskQuery::new(alpha, 2, sigma_next, *params, noise)?;
    let kappa = noise.kappa(alpha)?;
    let xi = noise.tail_index();
    if xi >= 1.0 {
        return Err(Error::InfiniteMean { xi });
    }
    let tail = 1.0 - alpha;
    let s2 = sigma_next * sigma_next;
    let power = (2.0 / (1.0 - xi.max(0.0))).max(2.0);
    let integral = integrate_endpoint_singular(
        |p| (params.a0() + s2 * (params.a1() * noise.sq_upper_quantile(p) + params.b())).sqrt(),
        tail,
        power,
        // The integrand is in loss units, so only a relative tolerance is meaningful.
        QuadOptions {
            abs_tol: 0.0,
            ..QuadOptions::default()
        },
    )?;
    Ok(kappa * integral / tail)
}

/// Monte Carlo exact AVaR at `m = 2` scored against [`tc_avar_m2_quadrature`].
pub fn avar_m2_check(
    params: &GarchParams,
    sigma_next: f64,
    alpha: f64,
    noise: &dyn NoiseModel,
    n_draws: usize,
    seed: u64,
) -> Result<McReport> {
    let q = RiskQuery::new(alpha, 2, sigma_next, *params, noise)?;
    let target = tc_avar_m2_quadrature(params, sigma_next, alpha, noise)?;
    let mc = tc_avar_exact_mc(&q, n_draws, seed)?;
    Ok(McReport::new(
        mc.estimate,
        mc.stderr,
        n_draws,
        seed,
        Some(target),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub m: usize,
    pub lower: f64,
    pub upper: f64,
    pub mc: McReport,
    /// Worst violation in units of the Monte Carlo standard error (0 inside the bounds).
    pub z_violation: f64,
}

impl SandwichReport {
    pub fn within(&self, k: f64) -> bool {
        self.z_violation <= k
    }
}

/// Places the Monte Carlo exact AVaR between the closed-form bounds.
pub fn sandwich_check(
    params: &GarchParams,
    sigma_next: f64,
    alpha: f64,
    m: usize,
    noise: &dyn NoiseModel,
    n_draws: usize,
    seed: u64,
) -> Result<SandwichReport> {
    let q = RiskQuery::new(alpha, m, sigma_next, *params, noise)?;
    let lower = avar_lower(&q)?;
    let upper = avar_upper(&q)?;
    let e = tc_avar_exact_mc(&q, n_draws, seed)?;
    let viol = |gap: f64| {
        if gap <= 0.0 {
            0.0
        } else {
            z_score(gap, e.stderr, 0.0)
        }
    };
    Ok(SandwichReport {
        m,
        lower,
        upper,
        mc: McReport::new(e.estimate, e.stderr, n_draws, seed, None),
        z_violation: viol(lower - e.estimate).max(viol(e.estimate - upper)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyReport {
    /// Time-consistent two-day VaR `√(a0 + σ²(a1 F_{Z²}⁻¹(α) + b)) F_Z⁻¹(α)`.
    pub m_star: f64,
    /// Plain two-day VaR `VaR_t(L_{t+2})`, simulated.
    pub m_star_star: McReport,
    pub gap: f64,
    /// `gap / stderr`; positive when the composed value is the more conservative.
    pub gap_z: f64,
}

/// Compares the composed two-day VaR with the static quantile of `L_{t+2}`.
pub fn inconsistency_demo(
    params: &GarchParams,
    sigma_next: f64,
    alpha: f64,
    noise: &dyn NoiseModel,
    n_draws: usize,
    seed: u64,
) -> Result<InconsistencyReport> {
    let q = RiskQuery::new(alpha, 2, sigma_next, *params, noise)?;
    check_draws(n_draws)?;
    let m_star = tc_var_single(&q);
    let z1 = draws(noise, n_draws, seed, S_DEMO_1);
    let z2 = draws(noise, n_draws, seed, S_DEMO_2);
    let mut l2: Vec<f64> = z1
        .iter()
        .zip(&z2)
        .map(|(&a, &b)| sigma2_sq(params, sigma_next, a).sqrt() * b)
        .collect();
    let (est, se) = quantile_with_stderr(&mut l2, alpha);
    let report = McReport::new(est, se, n_draws, seed, Some(m_star));
    let gap = m_star - est;
    Ok(InconsistencyReport {
        m_star,
        m_star_star: report,
        gap,
        gap_z: z_score(gap, se, 0.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub translation_var: bool,
    pub translation_avar: bool,
    pub monotone_var: bool,
    pub monotone_avar: bool,
    pub detail: Vec<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.translation_var && self.translation_avar && self.monotone_var && self.monotone_avar
    }
}

/// Translation invariance under a shift by `c` (exact for VaR, to `1e-12`
/// relative for AVaR) and monotonicity against a randomly dominating sample.
pub fn axioms_check(samples: &[f64], alpha: f64, c: f64, seed: u64) -> AxiomReport {
    let mut detail = Vec::new();
    let shifted: Vec<f64> = samples.iter().map(|x| x + c).collect();
    let (v, vs) = (
        mc_var_empirical(samples, alpha),
        mc_var_empirical(&shifted, alpha),
    );
    let translation_var = vs == v + c;
    if !translation_var {
        detail.push(format!("VaR shift: {vs} != {v} + {c}"));
    }
    let (a, as_) = (
        mc_avar_empirical(samples, alpha),
        mc_avar_empirical(&shifted, alpha),
    );
    let translation_avar = (as_ - (a + c)).abs() <= 1e-12 * (a + c).abs().max(1.0);
    if !translation_avar {
        detail.push(format!("AVaR shift: {as_} vs {a} + {c}"));
    }
    let scale = samples.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    let mut rng = stream_rng(seed, S_AXIOMS);
    let dominating: Vec<f64> = samples
        .iter()
        .map(|x| x + scale * rng.random::<f64>())
        .collect();
    let monotone_var = mc_var_empirical(&dominating, alpha) >= v;
    let monotone_avar = mc_avar_empirical(&dominating, alpha) >= a;
    if !monotone_var || !monotone_avar {
        detail.push("estimator decreased under componentwise domination".into());
    }
    AxiomReport {
        translation_var,
        translation_avar,
        monotone_var,
        monotone_avar,
        detail,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// Monte Carlo against a closed form; fails when `|z| ≥ Z_FAIL`.
    Agreement,
    /// Reported for information; never fails the suite.
    Demonstration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub alpha: f64,
    pub m: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub target: Option<f64>,
    pub z: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    fn agreement(name: &str, alpha: f64, m: usize, r: &McReport) -> Self {
        let z = r.z_score;
        Self {
            name: name.into(),
            kind: CheckKind::Agreement,
            alpha,
            m,
            estimate: r.estimate,
            stderr: r.stderr,
            target: r.target,
            z,
            pass: z.is_some_and(|z| z.abs() < Z_FAIL),
            note: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub draws: usize,
    pub seed: u64,
    pub sigma_next: f64,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, Copy)]
enum Job {
    OneDay(usize),
    ComposedVar(usize),
    ComposedAgg(usize),
    ComposedAvarSq(usize),
    AvarM2(usize),
    Sandwich(usize, usize),
    Demo(usize),
    Axioms(usize),
}

/// Runs every oracle check on `alphas` (sandwich checks for `m = 2..=m_max`).
/// Checks run in parallel; each uses its own generator stream.
pub fn run_verification(
    params: &GarchParams,
    sigma_next: f64,
    noise: &dyn NoiseModel,
    alphas: &[f64],
    m_max: usize,
    n_draws: usize,
    seed: u64,
) -> Result<VerificationReport> {
    for &a in alphas {
        RiskQuery::new(a, 1, sigma_next, *params, noise)?;
    }
    let mut jobs = Vec::new();
    for i in 0..alphas.len() {
        jobs.extend([
            Job::OneDay(i),
            Job::ComposedVar(i),
            Job::ComposedAgg(i),
            Job::ComposedAvarSq(i),
            Job::AvarM2(i),
        ]);
        jobs.extend((2..=m_max).map(|m| Job::Sandwich(i, m)));
        jobs.extend([Job::Demo(i), Job::Axioms(i)]);
    }
    // Each α gets its own seed so repeated checks at different levels are independent.
    let seed_for = |i: usize| seed.wrapping_add(i as u64);
    let nested: Vec<Vec<CheckResult>> = jobs
        .par_iter()
        .map(|&job| -> Result<Vec<CheckResult>> {
            Ok(match job {
                Job::OneDay(i) => {
                    let (v, a) =
                        one_day_checks(params, sigma_next, alphas[i], noise, n_draws, seed_for(i))?;
                    vec![
                        CheckResult::agreement("one-day-var", alphas[i], 1, &v),
                        CheckResult::agreement("one-day-avar", alphas[i], 1, &a),
                    ]
                }
                Job::ComposedVar(i) => {
                    let r = composed_var_check(
                        params,
                        sigma_next,
                        alphas[i],
                        noise,
                        n_draws,
                        seed_for(i),
                    )?;
                    vec![CheckResult::agreement("composed-var", alphas[i], 2, &r)]
                }
                Job::ComposedAgg(i) => {
                    let r = composed_var_aggregate_check(
                        params,
                        sigma_next,
                        alphas[i],
                        noise,
                        n_draws,
                        seed_for(i),
                    )?;
                    vec![CheckResult::agreement(
                        "composed-var-aggregate",
                        alphas[i],
                        2,
                        &r,
                    )]
                }
                Job::ComposedAvarSq(i) => {
                    let r = composed_avar_sq_check(
                        params,
                        sigma_next,
                        alphas[i],
                        noise,
                        n_draws,
                        seed_for(i),
                    )?;
                    vec![CheckResult::agreement(
                        "composed-avar-squared",
                        alphas[i],
                        2,
                        &r,
                    )]
                }
                Job::AvarM2(i) => {
                    let r =
                        avar_m2_check(params, sigma_next, alphas[i], noise, n_draws, seed_for(i))?;
                    vec![CheckResult::agreement(
                        "exact-avar-m2-quadrature",
                        alphas[i],
                        2,
                        &r,
                    )]
                }
                Job::Sandwich(i, m) => {
                    let s = sandwich_check(
                        params,
                        sigma_next,
                        alphas[i],
                        m,
                        noise,
                        n_draws,
                        seed_for(i),
                    )?;
                    vec![CheckResult {
                        name: "avar-bound-sandwich".into(),
                        kind: CheckKind::Agreement,
                        alpha: alphas[i],
                        m,
                        estimate: s.mc.estimate,
                        stderr: s.mc.stderr,
                        target: None,
                        z: Some(s.z_violation),
                        pass: s.z_violation < Z_FAIL,
                        note: Some(format!("bounds [{}, {}]", s.lower, s.upper)),
                    }]
                }
                Job::Demo(i) => {
                    let d = inconsistency_demo(
                        params,
                        sigma_next,
                        alphas[i],
                        noise,
                        n_draws,
                        seed_for(i),
                    )?;
                    let direction = if d.gap > 0.0 {
                        "composed VaR exceeds the static two-day VaR"
                    } else {
                        "static two-day VaR is not below the composed VaR"
                    };
                    vec![CheckResult {
                        name: "static-vs-composed-var".into(),
                        kind: CheckKind::Demonstration,
                        alpha: alphas[i],
                        m: 2,
                        estimate: d.m_star_star.estimate,
                        stderr: d.m_star_star.stderr,
                        target: Some(d.m_star),
                        z: Some(d.gap_z),
                        pass: true,
                        note: Some(format!("gap {:.6e}: {direction}", d.gap)),
                    }]
                }
                Job::Axioms(i) => {
                    let x: Vec<f64> = draws(noise, n_draws.min(100_000), seed_for(i), S_AXIOMS)
                        .into_iter()
                        .map(|z| sigma_next * z)
                        .collect();
                    let r = axioms_check(&x, alphas[i], sigma_next, seed_for(i));
                    vec![CheckResult {
                        name: "risk-axioms".into(),
                        kind: CheckKind::Agreement,
                        alpha: alphas[i],
                        m: 1,
                        estimate: f64::NAN,
                        stderr: 0.0,
                        target: None,
                        z: None,
                        pass: r.passed(),
                        note: (!r.detail.is_empty()).then(|| r.detail.join("; ")),
                    }]
                }
            })
        })
        .collect::<Result<_>>()?;
    let checks: Vec<CheckResult> = nested.into_iter().flatten().collect();
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        draws: n_draws,
        seed,
        sigma_next,
        checks,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evt::StandardNormalNoise;

    fn params() -> GarchParams {
        GarchParams::new(2e-7, 0.0451, 0.9531).unwrap()
    }

    #[test]
    fn empirical_estimators_on_integers() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(mc_var_empirical(&x, 0.95), 95.0);
        assert_eq!(mc_avar_empirical(&x, 0.95), 98.0);
        assert_eq!(mc_var_empirical(&[3.0; 10], 0.3), 3.0);
        assert_eq!(mc_avar_empirical(&[3.0; 10], 0.99), 3.0);
    }

    #[test]
    fn shift_by_one() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
        assert_eq!(mc_var_empirical(&y, 0.95), 96.0);
        assert!(axioms_check(&x, 0.95, 0.0, 1).passed());
        assert!(axioms_check(&x, 0.95, 1.0, 1).passed());
    }

    #[test]
    fn degenerate_inner_values_score_zero() {
        let p = GarchParams::new(2e-7, f64::MIN_POSITIVE, 0.9531).unwrap();
        let r = composed_var_check(&p, 0.01, 0.975, &StandardNormalNoise, 1000, 1).unwrap();
        assert_eq!(r.stderr, 0.0);
        assert_eq!(r.z_score, Some(0.0));
        let r = composed_avar_sq_check(&p, 0.01, 0.975, &StandardNormalNoise, 1000, 1).unwrap();
        assert_eq!(r.z_score, Some(0.0));
    }

    #[test]
    fn z_score_conventions() {
        assert_eq!(z_score(1.0, 0.0, 1.0), 0.0);
        assert_eq!(z_score(2.0, 0.0, 1.0), f64::INFINITY);
        assert_eq!(z_score(3.0, 0.5, 2.0), 2.0);
        let r = McReport::new(1.0, 0.1, 10, 0, None);
        assert!(r.z_score.is_none());
    }

    #[test]
    fn quadrature_oracle_matches_chi_square_integral() {
        // z-space form with the χ²₁ density as an independent reference.
        use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, Normal};
        let (alpha, s) = (0.975, 0.01);
        let p = params();
        let chi = ChiSquared::new(1.0).unwrap();
        // The generic χ² inverse is a coarse root search; go through the normal quantile.
        let lo = Normal::standard().inverse_cdf(0.5 * (1.0 + alpha)).powi(2);
        let f = |z: f64| (p.a0() + s * s * (p.a1() * z + p.b())).sqrt() * chi.pdf(z);
        let mut integral = 0.0;
        let (n, hi) = (400_000, lo + 80.0);
        let h = (hi - lo) / n as f64;
        for i in 0..n {
            let (a, b) = (lo + i as f64 * h, lo + (i as f64 + 1.0) * h);
            integral += h / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        }
        let kappa = StandardNormalNoise.kappa(alpha).unwrap();
        let reference = kappa * integral / (1.0 - alpha);
        let quad = tc_avar_m2_quadrature(&p, s, alpha, &StandardNormalNoise).unwrap();
        assert!(
            ((quad - reference) / reference).abs() < 1e-8,
            "{quad} vs {reference}"
        );
    }

    #[test]
    fn small_composed_checks_are_reasonable() {
        let r =
            composed_var_check(&params(), 0.01, 0.975, &StandardNormalNoise, 50_000, 2).unwrap();
        assert!(r.z_score.unwrap().abs() < 4.0, "{r:?}");
        let r = composed_avar_sq_check(&params(), 0.01, 0.975, &StandardNormalNoise, 50_000, 2)
            .unwrap();
        assert!(r.z_score.unwrap().abs() < 4.0, "{r:?}");
    }

    #[test]
    fn two_day_aggregate_uses_the_noise_quantile_inside_the_root() {
        // L_{t+1} + σ_{t+2} q is not a function of Z² alone (the first term keeps
        // the sign of Z), so its quantile sits at Z = q rather than at Z² = F_{Z²}⁻¹.
        let (p, s) = (params(), 0.01);
        for alpha in [0.975, 0.99] {
            let q = StandardNormalNoise.quantile(alpha);
            let direct = s * q + q * (p.a0() + s * s * (p.a1() * q * q + p.b())).sqrt();
            let r = composed_var_aggregate_check(&p, s, alpha, &StandardNormalNoise, 400_000, 3)
                .unwrap();
            assert!(
                ((r.estimate - direct) / r.stderr).abs() < 4.0,
                "{r:?} vs {direct}"
            );
            // The closed-form sum sits well above both.
            assert!(r.z_score.unwrap() < -4.0, "{r:?}");
        }
    }

    #[test]
    fn verification_report_runs_with_few_draws() {
        let rep = run_verification(
            &params(),
            0.01,
            &StandardNormalNoise,
            &[0.975],
            3,
            20_000,
            5,
        )
        .unwrap();
        assert_eq!(rep.checks.len(), 2 + 4 + 2 + 2);
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("composed-var"));
    }
}
