use proptest::prelude::*;

use tcrisk::evt::{GpdParams, NoiseModel, SplicedNoise, StandardNormalNoise, TailModel};
use tcrisk::garch::{filter, GarchParams, InitRule};
use tcrisk::oracle::{mc_avar_empirical, mc_var_empirical};
use tcrisk::risk::{
    avar_aggregate_bounds, avar_lower, avar_upper, cumulative_sum, tc_avar_squared,
    tc_var_aggregate, tc_var_single, PolyP, RiskQuery,
};

fn params() -> impl Strategy<Value = GarchParams> {
    (1e-8..1e-5f64, 0.01..0.2f64, 0.5..0.97f64)
        .prop_filter("stationary", |(_, a1, b)| a1 + b < 0.999)
        .prop_map(|(a0, a1, b)| GarchParams::new(a0, a1, b).unwrap())
}

fn spliced(xi: f64, beta: f64) -> SplicedNoise {
    let u = StandardNormalNoise.quantile(0.92);
    SplicedNoise::from_tail(TailModel::new(u, 0.92, GpdParams::new(xi, beta).unwrap()).unwrap())
        .unwrap()
}

proptest! {
    #[test]
    fn horner_matches_the_power_sum(
        a0 in 1e-8..1e-4f64, s2 in 1e-6..1e-2f64, n in 1usize..30, x in 0.5..1.5f64,
    ) {
        let p = PolyP::new(a0, s2, n).unwrap();
        let direct = a0 * (0..n - 1).map(|k| x.powi(k as i32)).sum::<f64>()
            + s2 * x.powi(n as i32 - 1);
        prop_assert!((p.eval(x) - direct).abs() <= 1e-12 * direct.abs());
    }

    #[test]
    fn tcvar_increases_in_level_and_horizon(
        p in params(), sigma in 1e-3..5e-2f64, a in 0.9..0.99f64, da in 1e-4..0.009f64, m in 1usize..12,
    ) {
        let n = StandardNormalNoise;
        let lo = RiskQuery::new(a, m, sigma, p, &n).unwrap();
        let hi = RiskQuery::new(a + da, m, sigma, p, &n).unwrap();
        prop_assert!(tc_var_single(&hi) > tc_var_single(&lo));
        prop_assert!(tc_var_aggregate(&hi) > tc_var_aggregate(&lo));
        prop_assert!(tc_var_aggregate(&lo.with_horizon(m + 1).unwrap()) > tc_var_aggregate(&lo));
    }

    #[test]
    fn bounds_are_ordered(
        p in params(), sigma in 1e-3..5e-2f64, a in 0.93..0.995f64, m in 1usize..12,
        xi in 0.0..0.45f64, beta in 0.3..0.8f64,
    ) {
        let normal = StandardNormalNoise;
        let sp = spliced(xi, beta);
        for noise in [&normal as &dyn NoiseModel, &sp] {
            let q = RiskQuery::new(a, m, sigma, p, noise).unwrap();
            let (lo, up) = (avar_lower(&q).unwrap(), avar_upper(&q).unwrap());
            prop_assert!(lo <= up * (1.0 + 1e-12), "{} {} {}", noise.name(), lo, up);
            let b = avar_aggregate_bounds(&q).unwrap();
            prop_assert!(b.weak_lower <= b.upper * (1.0 + 1e-12));
            prop_assert!(up >= tc_var_single(&q));
            prop_assert!(tc_avar_squared(&q).unwrap() > 0.0);
        }
    }

    #[test]
    fn linear_in_sigma_without_intercept(
        a1 in 0.01..0.2f64, b in 0.5..0.95f64, sigma in 1e-3..5e-2f64, lambda in 0.1..10.0f64,
        a in 0.95..0.99f64, m in 1usize..10,
    ) {
        // a0 is required to be positive; the smallest normal value is zero at this scale.
        let p = GarchParams::new(f64::MIN_POSITIVE, a1, b).unwrap();
        let n = StandardNormalNoise;
        let q = RiskQuery::new(a, m, sigma, p, &n).unwrap();
        let ql = RiskQuery::new(a, m, lambda * sigma, p, &n).unwrap();
        let rel = |x: f64, y: f64| ((x - y) / y).abs();
        prop_assert!(rel(tc_var_single(&ql), lambda * tc_var_single(&q)) < 1e-12);
        prop_assert!(rel(avar_upper(&ql).unwrap(), lambda * avar_upper(&q).unwrap()) < 1e-12);
        prop_assert!(rel(avar_lower(&ql).unwrap(), lambda * avar_lower(&q).unwrap()) < 1e-12);
    }

    #[test]
    fn increasing_in_sigma_with_intercept(
        p in params(), sigma in 1e-3..5e-2f64, lambda in 1.01..3.0f64, m in 1usize..10,
    ) {
        let n = StandardNormalNoise;
        let q = RiskQuery::new(0.99, m, sigma, p, &n).unwrap();
        let ql = RiskQuery::new(0.99, m, lambda * sigma, p, &n).unwrap();
        prop_assert!(tc_var_single(&ql) > tc_var_single(&q));
        prop_assert!(avar_upper(&ql).unwrap() > avar_upper(&q).unwrap());
    }

    #[test]
    fn cumulative_sum_is_a_running_sum(v in prop::collection::vec(-1e3..1e3f64, 1..50)) {
        let c = cumulative_sum(&v);
        prop_assert_eq!(c.len(), v.len());
        prop_assert_eq!(c[0], v[0]);
        for k in 1..v.len() {
            prop_assert_eq!(c[k], c[k - 1] + v[k]);
        }
    }

    #[test]
    fn gpd_quantile_round_trip(xi in -0.4..0.9f64, beta in 0.05..3.0f64, q in 0.001..0.999f64) {
        let g = GpdParams::new(xi, beta).unwrap();
        let x = g.quantile(q).unwrap();
        prop_assert!((g.cdf(x).unwrap() - q).abs() < 1e-10);
    }

    #[test]
    fn spliced_quantile_round_trip(xi in 0.0..0.6f64, beta in 0.2..1.0f64, a in 0.001..0.999f64) {
        let n = spliced(xi, beta);
        prop_assert!((n.cdf(n.quantile(a)) - a).abs() < 1e-10);
        prop_assert!((n.quantile(a) + n.quantile(1.0 - a)).abs() < 1e-9);
    }

    #[test]
    fn empirical_estimators_shift_and_order(
        x in prop::collection::vec(-10.0..10.0f64, 20..200), c in -5.0..5.0f64, a in 0.5..0.99f64,
    ) {
        let y: Vec<f64> = x.iter().map(|v| v + c).collect();
        prop_assert_eq!(mc_var_empirical(&y, a), mc_var_empirical(&x, a) + c);
        let (va, av) = (mc_var_empirical(&x, a), mc_avar_empirical(&x, a));
        prop_assert!(av >= va - 1e-12);
        let bigger: Vec<f64> = x.iter().map(|v| v + c.abs()).collect();
        prop_assert!(mc_var_empirical(&bigger, a) >= va);
    }

    #[test]
    fn filter_reconstructs_losses(p in params(), x in prop::collection::vec(-0.05..0.05f64, 1..300)) {
        let path = filter(&x, &p, InitRule::Unconditional);
        let s = path.sigmas();
        for t in 0..x.len() {
            prop_assert!((s[t] * path.residuals[t] - x[t]).abs() <= 1e-15 + 1e-12 * x[t].abs());
        }
        let last = x.len() - 1;
        let next = p.a0() + p.a1() * x[last] * x[last] + p.b() * path.variances[last];
        prop_assert!((path.sigma_next - next.sqrt()).abs() < 1e-15);
    }
}
