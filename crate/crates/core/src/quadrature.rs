//! Adaptive composite Gauss–Legendre quadrature.
//!
//! Each panel is integrated with a 15-point rule and bisected until the
//! panel estimate and the sum of its two halves agree to the panel's share
//! of the tolerance.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 15;

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_depth: 60,
        }
    }
}

struct Rule {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
}

/// Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut nodes = [0.0; ORDER];
        let mut weights = [0.0; ORDER];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Rule { nodes, weights }
    })
}

/// Returns `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let r = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    r.nodes
        .iter()
        .zip(r.weights.iter())
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("quadrature bounds must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    let whole = panel(&f, a, b);
    let tol = opts.abs_tol.max(opts.rel_tol * whole.abs());
    let mut failed = false;
    let value = refine(&f, a, b, whole, tol, 0, opts.max_depth, &mut failed);
    if !value.is_finite() {
        return Err(Error::Quadrature(format!(
            "non-finite integral on [{a}, {b}]"
        )));
    }
    if failed {
        return Err(Error::Quadrature(format!(
            "tolerance {tol:e} not reached on [{a}, {b}] within depth {}",
            opts.max_depth
        )));
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    max_depth: u32,
    failed: &mut bool,
) -> f64 {
    let mid = 0.5 * (a + b);
    let left = panel(f, a, mid);
    let right = panel(f, mid, b);
    let split = left + right;
    let floor = 64.0 * f64::EPSILON * split.abs();
    if (split - whole).abs() <= tol.max(floor) {
        return split;
    }
    if depth >= max_depth {
        *failed = true;
        return split;
    }
    refine(f, a, mid, left, 0.5 * tol, depth + 1, max_depth, failed)
        + refine(f, mid, b, right, 0.5 * tol, depth + 1, max_depth, failed)
}

/// `∫_0^{p_max} g(p) dp` for integrands with an integrable blow-up at `p = 0`.
///
/// Substitutes `p = p_max · s^power`; with `g(p) ~ p^{-c}` the transformed
/// integrand behaves like `s^{power(1-c)-1}`, which is bounded once
/// `power ≥ 1/(1-c)`.
pub fn integrate_endpoint_singular<G: Fn(f64) -> f64>(
    g: G,
    p_max: f64,
    power: f64,
    opts: QuadOptions,
) -> Result<f64> {
    if p_max <= 0.0 || power < 1.0 {
        return Err(Error::invalid("need p_max > 0 and power >= 1"));
    }
    let scale = p_max * power;
    integrate(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let sr1 = s.powf(power - 1.0);
            let p = p_max * sr1 * s;
            if p <= 0.0 || sr1 == 0.0 {
                return 0.0;
            }
            g(p) * scale * sr1
        },
        0.0,
        1.0,
        opts,
    )
}
