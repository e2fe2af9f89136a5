use std::io::Cursor;

use tcrisk::evt::{
    fit_gpd, select_threshold, BodyMode, GpdParams, NoiseModel, SplicedNoise, StandardNormalNoise,
    TailModel,
};
use tcrisk::garch::{filter, fit_qmle, simulate, GarchParams, InitRule, QmleOptions};
use tcrisk::risk::{build_risk_table, McOptions, Measure};
use tcrisk::timeseries::{ljung_box, read_prices, to_losses, ColumnSpec, CsvFormat, LossSeries};

fn truth() -> GarchParams {
    GarchParams::new(2e-7, 0.0451, 0.9531).unwrap()
}

/// Heavy-tailed noise: normal body, GPD(0.25, 0.31) above the 92% point.
/// The scale puts the variance within 1% of one; a larger variance would make
/// the simulated process explosive at these parameters.
fn heavy() -> SplicedNoise {
    let u = StandardNormalNoise.quantile(0.92);
    let body: Vec<f64> = (1..20_000)
        .map(|i| StandardNormalNoise.quantile(i as f64 / 20_000.0))
        .collect();
    let tail = TailModel::new(u, 0.92, GpdParams::new(0.25, 0.31).unwrap()).unwrap();
    let n = SplicedNoise::new(&body, tail, BodyMode::Symmetrized).unwrap();
    assert!(n.moments().passed, "{:?}", n.moments());
    n
}

fn prices_csv(losses: &LossSeries) -> String {
    let mut out = String::from("date,open,close\n");
    let mut p = 50.0;
    out.push_str(&format!("2000-01-01,1,{p}\n"));
    for (i, l) in losses.as_slice().iter().enumerate() {
        p *= (-l).exp();
        let day = i + 1;
        out.push_str(&format!(
            "{:04}-{:02}-{:02},1,{p}\n",
            2000 + day / 372,
            1 + day / 31 % 12,
            1 + day % 31
        ));
    }
    out
}

#[test]
fn csv_round_trip_recovers_the_losses() {
    let sim = simulate(&truth(), &StandardNormalNoise, 500, 1, 1e-4).unwrap();
    let csv = prices_csv(&sim.losses);
    let p = read_prices(
        Cursor::new(csv.as_bytes()),
        &ColumnSpec::Name("close".into()),
        &CsvFormat::default(),
    )
    .unwrap();
    assert_eq!(p.dates()[0], "2000-01-01");
    let l = to_losses(&p);
    assert_eq!(l.len(), 500);
    for (a, b) in l.as_slice().iter().zip(sim.losses.as_slice()) {
        assert!((a - b).abs() < 1e-12);
    }
    // Auto picks the last numeric column, which is the same one here.
    let auto = read_prices(
        Cursor::new(csv.as_bytes()),
        &ColumnSpec::Auto,
        &CsvFormat::default(),
    )
    .unwrap();
    assert_eq!(auto.prices(), p.prices());
}

#[test]
fn garch_filter_whitens_simulated_losses() {
    let sim = simulate(&truth(), &StandardNormalNoise, 6000, 2, 1.111e-4).unwrap();
    let x = sim.losses.as_slice();
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    // Volatility clustering shows in squared losses...
    assert!(ljung_box(&sq, 10).unwrap().p_value < 1e-3);
    // ...and is gone from squared residuals under the true parameters.
    let z = filter(x, &truth(), InitRule::Unconditional).residuals;
    let zsq: Vec<f64> = z.iter().map(|v| v * v).collect();
    assert!(ljung_box(&zsq, 10).unwrap().p_value > 1e-3);
}

#[test]
fn end_to_end_estimation_on_heavy_tailed_losses() {
    let noise = heavy();
    let sim = simulate(&truth(), &noise, 20_000, 3, 1.111e-4).unwrap();
    let fit = fit_qmle(&sim.losses, &QmleOptions::default()).unwrap();
    assert!(fit.converged);
    let se = fit.stderrs.expect("sandwich stderrs");
    let est = [fit.params.a0(), fit.params.a1(), fit.params.b()];
    let tru = [2e-7, 0.0451, 0.9531];
    for k in 0..3 {
        assert!(
            (est[k] - tru[k]).abs() < 4.0 * se[k],
            "param {k}: {} vs {} ± {}",
            est[k],
            tru[k],
            se[k]
        );
    }

    let path = filter(sim.losses.as_slice(), &fit.params, InitRule::Unconditional);
    let th = select_threshold(&path.residuals, 0.92).unwrap();
    let exc: Vec<f64> = path
        .residuals
        .iter()
        .filter(|&&z| z > th.u)
        .map(|z| z - th.u)
        .collect();
    let g = fit_gpd(&exc).unwrap();
    let (lo, hi) = g.ci95_xi.unwrap();
    assert!(lo - 0.1 < 0.25 && 0.25 < hi + 0.1, "xi CI ({lo}, {hi})");

    let tail = TailModel::new(th.u, th.fu, g.params).unwrap();
    let fitted = SplicedNoise::new(&path.residuals, tail, BodyMode::Symmetrized).unwrap();
    assert!((fitted.quantile(0.99) - noise.quantile(0.99)).abs() < 0.15);

    let tables = build_risk_table(
        &[0.975, 0.99],
        5,
        path.sigma_next,
        fit.params,
        &fitted,
        &[
            Measure::TcVar,
            Measure::TcAvarUpper,
            Measure::TcAvarLower,
            Measure::TcAvarMc,
        ],
        &McOptions {
            draws: 20_000,
            seed: 9,
        },
    )
    .unwrap();
    let up = &tables[1];
    let lo = &tables[2];
    let mc = &tables[3];
    for i in 0..2 {
        for m in 1..=5 {
            let (l, u) = (lo.single(i, m), up.single(i, m));
            let (e, s) = (mc.single(i, m), mc.stderr.as_ref().unwrap()[m - 1][i]);
            assert!(l <= u);
            assert!(
                l <= e + 4.0 * s && e - 4.0 * s <= u,
                "alpha {i} m {m}: {l} {e}±{s} {u}"
            );
        }
    }
}

#[test]
fn different_bodies_share_the_tail_quantities() {
    let noise = heavy();
    let sim = simulate(&truth(), &noise, 3000, 4, 1.111e-4).unwrap();
    let tail = *noise.tail();
    let emp = SplicedNoise::new(&sim.path.residuals, tail, BodyMode::Symmetrized).unwrap();
    for a in [0.93, 0.975, 0.99, 0.999] {
        assert!((emp.quantile(a) - noise.quantile(a)).abs() < 1e-12);
        assert!((emp.kappa(a).unwrap() - noise.kappa(a).unwrap()).abs() < 1e-10);
        assert!((emp.kappa2(a).unwrap() - noise.kappa2(a).unwrap()).abs() < 1e-9);
    }
}
