//! GARCH(1,1) losses `L_t = σ_t Z_t`, `σ_t² = a0 + a1 L_{t−1}² + b σ_{t−1}²`:
//! filtering, simulation, one-step forecast and Gaussian QMLE.

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::NoiseModel;
use crate::optimize::{fd_step, nelder_mead, numerical_hessian, Minimum, SimplexOptions};
use crate::rng::stream_rng;
use crate::timeseries::{sample_variance, LossSeries};

/// Below this many observations the QMLE fit emits a warning.
pub const QMLE_MIN_RECOMMENDED: usize = 500;
const FD_REL_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct GarchParams {
    a0: f64,
    a1: f64,
    b: f64,
}

#[derive(Deserialize)]
struct RawParams {
    a0: f64,
    a1: f64,
    b: f64,
}

impl TryFrom<RawParams> for GarchParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        GarchParams::new(r.a0, r.a1, r.b)
    }
}

impl GarchParams {
    pub fn new(a0: f64, a1: f64, b: f64) -> Result<Self> {
        for (name, v) in [("a0", a0), ("a1", a1), ("b", b)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "GARCH coefficient {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(Self { a0, a1, b })
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn persistence(&self) -> f64 {
        self.a1 + self.b
    }

    pub fn is_stationary(&self) -> bool {
        self.persistence() < 1.0
    }

    /// `a0 / (1 − a1 − b)` when covariance-stationary.
    pub fn unconditional_variance(&self) -> Option<f64> {
        self.is_stationary()
            .then(|| self.a0 / (1.0 - self.persistence()))
    }

    /// Warning text when `a1 + b ≥ 1`; never an error.
    pub fn stationarity_warning(&self) -> Option<String> {
        (!self.is_stationary()).then(|| {
            format!(
                "a1 + b = {:.6} >= 1: model is not covariance-stationary",
                self.persistence()
            )
        })
    }
}

/// How `σ_1²` is chosen when filtering observed losses.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum InitRule {
    /// `a0/(1 − a1 − b)`, falling back to the sample variance when `a1 + b ≥ 1`.
    #[default]
    Unconditional,
    SampleVariance,
    Fixed(f64),
}

impl InitRule {
    pub fn initial_variance(&self, losses: &[f64], p: &GarchParams) -> f64 {
        let sample = || {
            if losses.len() > 1 {
                sample_variance(losses)
            } else {
                losses[0] * losses[0]
            }
        };
        let v = match *self {
            InitRule::Unconditional => p.unconditional_variance().unwrap_or_else(sample),
            InitRule::SampleVariance => sample(),
            InitRule::Fixed(v) => v,
        };
        if v > 0.0 && v.is_finite() {
            v
        } else {
            p.a0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityPath {
    /// `σ_t²` for `t = 1..n`.
    pub variances: Vec<f64>,
    /// `z_t = L_t / σ_t`.
    pub residuals: Vec<f64>,
    /// `σ_{n+1}`, known at the end of the sample.
    pub sigma_next: f64,
}

impl VolatilityPath {
    pub fn sigmas(&self) -> Vec<f64> {
        self.variances.iter().map(|v| v.sqrt()).collect()
    }

    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }
}

fn next_variance(p: &GarchParams, loss: f64, variance: f64) -> f64 {
    p.a0 + p.a1 * loss * loss + p.b * variance
}

/// Runs the variance recursion over `losses` (which must be non-empty).
pub fn filter(losses: &[f64], p: &GarchParams, init: InitRule) -> VolatilityPath {
    assert!(!losses.is_empty(), "cannot filter an empty loss series");
    let mut variances = Vec::with_capacity(losses.len());
    let mut residuals = Vec::with_capacity(losses.len());
    let mut v = init.initial_variance(losses, p);
    for &l in losses {
        variances.push(v);
        residuals.push(l / v.sqrt());
        v = next_variance(p, l, v);
    }
    VolatilityPath {
        variances,
        residuals,
        sigma_next: v.sqrt(),
    }
}

/// `σ_{n+1} = √(a0 + a1 L_n² + b σ_n²)`.
pub fn forecast_sigma_next(losses: &[f64], p: &GarchParams, init: InitRule) -> f64 {
    filter(losses, p, init).sigma_next
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub losses: LossSeries,
    /// Residuals are the generating noise draws.
    pub path: VolatilityPath,
}

/// Simulates `n` losses with `σ_1² = sigma0_sq`; noise comes from stream 0 of `seed`.
pub fn simulate(
    p: &GarchParams,
    noise: &dyn NoiseModel,
    n: usize,
    seed: u64,
    sigma0_sq: f64,
) -> Result<Simulation> {
    if n == 0 {
        return Err(Error::invalid("simulation length must be positive"));
    }
    if !(sigma0_sq > 0.0 && sigma0_sq.is_finite()) {
        return Err(Error::invalid("initial variance must be positive"));
    }
    let mut rng = stream_rng(seed, 0);
    let mut losses = Vec::with_capacity(n);
    let mut variances = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    let mut v = sigma0_sq;
    for _ in 0..n {
        let z = noise.sample(&mut rng);
        let l = v.sqrt() * z;
        variances.push(v);
        residuals.push(z);
        losses.push(l);
        v = next_variance(p, l, v);
    }
    Ok(Simulation {
        losses: LossSeries::new(losses)?,
        path: VolatilityPath {
            variances,
            residuals,
            sigma_next: v.sqrt(),
        },
    })
}

/// Per-observation Gaussian quasi log-likelihood terms `−½(ln σ_t² + L_t²/σ_t²)`.
pub fn quasi_loglik_terms(losses: &[f64], p: &GarchParams, init: InitRule) -> Vec<f64> {
    let mut v = init.initial_variance(losses, p);
    losses
        .iter()
        .map(|&l| {
            let term = -0.5 * (v.ln() + l * l / v);
            v = next_variance(p, l, v);
            term
        })
        .collect()
}

pub fn quasi_loglik(losses: &[f64], p: &GarchParams, init: InitRule) -> f64 {
    let mut v = init.initial_variance(losses, p);
    let mut ll = 0.0;
    for &l in losses {
        ll -= 0.5 * (v.ln() + l * l / v);
        v = next_variance(p, l, v);
    }
    ll
}

#[derive(Debug, Clone, Copy)]
pub struct QmleOptions {
    pub init: InitRule,
    pub simplex: SimplexOptions,
    /// Additional runs from perturbed starting points.
    pub restarts: usize,
}

impl Default for QmleOptions {
    fn default() -> Self {
        Self {
            init: InitRule::Unconditional,
            simplex: SimplexOptions {
                x_tol: 1e-9,
                f_tol: 1e-10,
                max_iter: 5000,
                initial_step: 0.2,
            },
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmleFit {
    pub params: GarchParams,
    /// Sandwich standard errors of `(a0, a1, b)`; `None` when the Hessian is degenerate.
    pub stderrs: Option<[f64; 3]>,
    pub loglik: f64,
    pub init_rule: InitRule,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// Offsets (in log-parameter space) of the restart points.
const RESTART_OFFSETS: [[f64; 3]; 3] = [[0.7, -0.4, 0.03], [-0.7, 0.4, -0.05], [1.5, 0.8, -0.1]];

/// Maximizes the Gaussian quasi log-likelihood over the positive orthant.
///
/// The simplex search runs on `(ln a0, ln a1, ln b)`. Restarts are evaluated in
/// parallel and reduced by best likelihood with ties broken by restart index,
/// so the result does not depend on the thread count.
pub fn fit_qmle(losses: &LossSeries, opts: &QmleOptions) -> Result<QmleFit> {
    let x = losses.as_slice();
    if x.len() < 3 {
        return Err(Error::TooFewObservations {
            needed: 3,
            got: x.len(),
        });
    }
    let var = sample_variance(x);
    if x.iter().all(|&v| v == x[0]) || !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let mut warnings = Vec::new();
    if x.len() < QMLE_MIN_RECOMMENDED {
        warnings.push(format!(
            "only {} observations; QMLE is unreliable below {QMLE_MIN_RECOMMENDED}",
            x.len()
        ));
    }

    let n = x.len() as f64;
    let init = opts.init;
    let objective = |theta: &[f64]| -> f64 {
        match GarchParams::new(theta[0].exp(), theta[1].exp(), theta[2].exp()) {
            Ok(p) => -quasi_loglik(x, &p, init) / n,
            Err(_) => f64::INFINITY,
        }
    };

    let base = [(0.05 * var).ln(), 0.05f64.ln(), 0.90f64.ln()];
    let mut starts = vec![base.to_vec()];
    for off in RESTART_OFFSETS.iter().take(opts.restarts) {
        starts.push(base.iter().zip(off).map(|(b, o)| b + o).collect());
    }
    let runs: Vec<Minimum> = starts
        .par_iter()
        .map(|s| nelder_mead(objective, s, opts.simplex))
        .collect();
    let mut iterations: usize = runs.iter().map(|r| r.iterations).sum();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .expect("at least one start");
    let polish = nelder_mead(
        objective,
        &best.x,
        SimplexOptions {
            initial_step: 0.02,
            ..opts.simplex
        },
    );
    iterations += polish.iterations;
    let (theta, converged) = if polish.value <= best.value {
        (polish.x, polish.converged)
    } else {
        (best.x, polish.converged && best.converged)
    };
    if !converged {
        warnings.push(format!(
            "simplex did not converge within {} iterations; reporting best point",
            opts.simplex.max_iter
        ));
    }

    let params = GarchParams::new(theta[0].exp(), theta[1].exp(), theta[2].exp())?;
    if let Some(w) = params.stationarity_warning() {
        warnings.push(w);
    }
    let stderrs = sandwich_stderrs(x, &params, init);
    if stderrs.is_none() {
        warnings.push("Hessian is degenerate; standard errors not available".into());
    }
    Ok(QmleFit {
        params,
        stderrs,
        loglik: quasi_loglik(x, &params, init),
        init_rule: init,
        n_obs: x.len(),
        converged,
        iterations,
        warnings,
    })
}

/// Robust covariance `H⁻¹ S H⁻¹` from the numerical Hessian `H` of the total
/// quasi log-likelihood and the outer product `S` of per-observation scores.
pub fn sandwich_stderrs(losses: &[f64], p: &GarchParams, init: InitRule) -> Option<[f64; 3]> {
    let at = |v: &[f64]| GarchParams::new(v[0], v[1], v[2]);
    let x0 = [p.a0, p.a1, p.b];

    let total = |v: &[f64]| match at(v) {
        Ok(q) => quasi_loglik(losses, &q, init),
        Err(_) => f64::NAN,
    };
    let h = numerical_hessian(total, &x0, FD_REL_STEP);
    let hess = Matrix3::from_fn(|i, j| h[i][j]);

    let mut scores = vec![[0.0f64; 3]; losses.len()];
    for i in 0..3 {
        let step = fd_step(x0[i], FD_REL_STEP);
        let mut plus = x0;
        let mut minus = x0;
        plus[i] += step;
        minus[i] -= step;
        let lp = quasi_loglik_terms(losses, &at(&plus).ok()?, init);
        let lm = quasi_loglik_terms(losses, &at(&minus).ok()?, init);
        for (t, s) in scores.iter_mut().enumerate() {
            s[i] = (lp[t] - lm[t]) / (2.0 * step);
        }
    }
    let mut outer = Matrix3::<f64>::zeros();
    for s in &scores {
        for i in 0..3 {
            for j in 0..3 {
                outer[(i, j)] += s[i] * s[j];
            }
        }
    }

    let hinv = hess.try_inverse()?;
    let cov = hinv * outer * hinv;
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let v = cov[(i, i)];
        if !(v > 0.0 && v.is_finite()) {
            return None;
        }
        *o = v.sqrt();
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evt::StandardNormalNoise;
    use approx::assert_relative_eq;

    fn fitted() -> GarchParams {
        GarchParams::new(2e-7, 0.0451, 0.9531).unwrap()
    }

    #[test]
    fn rejects_non_positive_coefficients() {
        assert!(GarchParams::new(0.0, 0.1, 0.8).is_err());
        assert!(GarchParams::new(1e-6, -0.1, 0.8).is_err());
        assert!(GarchParams::new(1e-6, 0.1, f64::NAN).is_err());
        let json = r#"{"a0": 1e-6, "a1": -0.05, "b": 0.9}"#;
        assert!(serde_json::from_str::<GarchParams>(json).is_err());
    }

    #[test]
    fn non_stationary_is_only_a_warning() {
        let p = GarchParams::new(1e-6, 0.2, 0.85).unwrap();
        assert!(!p.is_stationary());
        assert!(p.stationarity_warning().is_some());
        assert!(p.unconditional_variance().is_none());
    }

    #[test]
    fn zero_losses_with_b_zero() {
        let p = GarchParams::new(1.0, 0.5, f64::MIN_POSITIVE).unwrap();
        let path = filter(&[0.0, 0.0, 0.0], &p, InitRule::Fixed(1.0));
        for v in &path.variances {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-300);
        }
        assert_eq!(path.residuals, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn one_step_hand_recursion() {
        let p = GarchParams::new(1.0, 0.5, 0.25).unwrap();
        let path = filter(&[1.0, 0.0], &p, InitRule::Fixed(1.0));
        assert_relative_eq!(path.variances[1], 1.75, epsilon = 1e-15);
        assert_relative_eq!(
            forecast_sigma_next(&[0.0], &p, InitRule::Fixed(1.0)),
            1.25f64.sqrt()
        );
    }

    #[test]
    fn variance_floor_and_recursion_identity() {
        let p = fitted();
        let sim = simulate(&p, &StandardNormalNoise, 2000, 3, 1e-4).unwrap();
        let l = sim.losses.as_slice();
        let path = filter(l, &p, InitRule::Fixed(1e-4));
        for t in 1..l.len() {
            let expected = p.a0() + p.a1() * l[t - 1] * l[t - 1] + p.b() * path.variances[t - 1];
            assert!(((path.variances[t] - expected) / expected).abs() < 1e-12);
            assert!(path.variances[t] >= p.a0());
        }
    }

    #[test]
    fn simulate_single_step_and_determinism() {
        let p = fitted();
        let one = simulate(&p, &StandardNormalNoise, 1, 5, 1e-4).unwrap();
        assert_eq!(one.path.variances, vec![1e-4]);
        assert_relative_eq!(one.losses.as_slice()[0], 1e-2 * one.path.residuals[0]);
        let a = simulate(&p, &StandardNormalNoise, 500, 42, 1e-4).unwrap();
        let b = simulate(&p, &StandardNormalNoise, 500, 42, 1e-4).unwrap();
        assert_eq!(a.losses, b.losses);
        assert!(simulate(&p, &StandardNormalNoise, 0, 1, 1e-4).is_err());
    }

    #[test]
    fn refiltering_recovers_the_simulated_path() {
        let p = fitted();
        let sim = simulate(&p, &StandardNormalNoise, 10_000, 8, 1e-4).unwrap();
        let path = filter(sim.losses.as_slice(), &p, InitRule::Fixed(1e-4));
        for (a, b) in path.variances.iter().zip(&sim.path.variances) {
            assert!(((a - b) / b).abs() < 1e-10);
        }
        for (a, b) in path.residuals.iter().zip(&sim.path.residuals) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300) + 1e-300);
        }
        assert_eq!(path.sigma_next, sim.path.sigma_next);
    }

    #[test]
    fn calm_stretch_converges_to_fixed_point() {
        let p = fitted();
        let s = forecast_sigma_next(&vec![0.0; 2000], &p, InitRule::Fixed(1e-4));
        let fixed = (p.a0() / (1.0 - p.b())).sqrt();
        assert_relative_eq!(s, fixed, max_relative = 1e-12);
        assert!((fixed - 2.065e-3).abs() < 1e-6);
    }

    #[test]
    fn init_rules() {
        let p = fitted();
        let l = [0.01, -0.02, 0.015];
        assert_relative_eq!(
            InitRule::Unconditional.initial_variance(&l, &p),
            2e-7 / (1.0 - 0.9982),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            InitRule::SampleVariance.initial_variance(&l, &p),
            sample_variance(&l)
        );
        assert_eq!(InitRule::Fixed(3.0).initial_variance(&l, &p), 3.0);
        let ns = GarchParams::new(1e-6, 0.2, 0.85).unwrap();
        assert_relative_eq!(
            InitRule::Unconditional.initial_variance(&l, &ns),
            sample_variance(&l)
        );
    }

    #[test]
    fn qmle_rejects_constant_series() {
        let l = LossSeries::new(vec![0.01; 600]).unwrap();
        assert!(matches!(
            fit_qmle(&l, &QmleOptions::default()),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn qmle_short_series_warns() {
        let p = GarchParams::new(1e-5, 0.1, 0.8).unwrap();
        let sim = simulate(&p, &StandardNormalNoise, 300, 1, 5e-5).unwrap();
        let fit = fit_qmle(&sim.losses, &QmleOptions::default()).unwrap();
        assert!(fit.warnings.iter().any(|w| w.contains("unreliable")));
    }
}
