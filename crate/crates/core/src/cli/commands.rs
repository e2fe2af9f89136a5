use serde::Serialize;
use tcrisk::evt::{
    fit_gpd, mean_excess_curve, qq_points, select_threshold, BodyMode, NoiseModel, SplicedNoise,
    TailModel,
};
use tcrisk::garch::{
    filter, fit_qmle, simulate as simulate_path, GarchParams, InitRule, QmleOptions,
};
use tcrisk::oracle::{run_verification, CheckKind};
use tcrisk::risk::{
    build_risk_table, grid_to_csv, one_day_var, sqrt_scaling, tc_var_aggregate, McOptions,
    RiskQuery, RiskTable,
};
use tcrisk::timeseries::{
    ljung_box, load_prices, sample_acf, to_losses, ColumnSpec, CsvFormat, PriceSeries,
};

use super::bundle::{GarchSummary, ModelBundle, NoiseKind};
use super::output::{columns_csv, OutDir};
use super::{
    parse_alphas, parse_measures, CliError, FitArgs, InitArg, InputArgs, ModelArgs, OutputFormat,
    SimulateArgs, TableArgs, VerifyArgs, EXIT_VERIFY,
};

const LJUNG_BOX_LAGS: [usize; 4] = [5, 10, 15, 20];
const MEAN_EXCESS_POINTS: usize = 100;

fn load_input(args: &InputArgs) -> Result<PriceSeries, CliError> {
    let path = args
        .input
        .as_ref()
        .ok_or_else(|| CliError::usage("--input is required"))?;
    if !args.delimiter.is_ascii() {
        return Err(CliError::usage(
            "delimiter must be a single ASCII character",
        ));
    }
    let column = match &args.column {
        Some(c) => c.parse::<ColumnSpec>().unwrap_or(ColumnSpec::Auto),
        None => ColumnSpec::Auto,
    };
    let format = CsvFormat {
        delimiter: args.delimiter as u8,
        has_header: args.no_header.then_some(false),
        date_column: args
            .date_column
            .as_ref()
            .and_then(|c| c.parse::<ColumnSpec>().ok()),
    };
    Ok(load_prices(path, &column, &format)?)
}

fn init_rule(arg: InitArg) -> InitRule {
    match arg {
        InitArg::Unconditional => InitRule::Unconditional,
        InitArg::SampleVariance => InitRule::SampleVariance,
    }
}

struct Fitted {
    prices: PriceSeries,
    losses: Vec<f64>,
    sigmas: Vec<f64>,
    bundle: ModelBundle,
    converged: bool,
}

/// Runs the full estimation pipeline in memory.
fn estimate(args: &InputArgs) -> Result<Fitted, CliError> {
    let prices = load_input(args)?;
    let losses = to_losses(&prices);
    let init = init_rule(args.init);
    let fit = fit_qmle(
        &losses,
        &QmleOptions {
            init,
            ..QmleOptions::default()
        },
    )
    .map_err(|e| CliError::fit(format!("GARCH fit failed: {e}")))?;
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    let path = filter(losses.as_slice(), &fit.params, init);

    let threshold = select_threshold(&path.residuals, args.threshold_q).map_err(CliError::from)?;
    for w in &threshold.warnings {
        eprintln!("warning: {w}");
    }
    let excesses: Vec<f64> = path
        .residuals
        .iter()
        .filter(|&&z| z > threshold.u)
        .map(|z| z - threshold.u)
        .collect();
    let gpd = fit_gpd(&excesses).map_err(|e| CliError::fit(format!("GPD fit failed: {e}")))?;
    let tail = TailModel::new(threshold.u, threshold.fu, gpd.params).map_err(CliError::from)?;
    let moments = SplicedNoise::new(&path.residuals, tail, BodyMode::Symmetrized)
        .ok()
        .map(|n| *n.moments());
    if let Some(m) = moments.filter(|m| !m.passed) {
        eprintln!(
            "warning: spliced noise has mean {:.4} and variance {:.4}; the unit-variance assumption is violated",
            m.mean, m.variance
        );
    }
    let converged = fit.converged && gpd.converged;
    let sigmas = path.sigmas();
    Ok(Fitted {
        losses: losses.into_inner(),
        sigmas,
        converged,
        bundle: ModelBundle {
            version: env!("CARGO_PKG_VERSION").to_string(),
            garch: fit.params,
            init_rule: init,
            garch_fit: Some(GarchSummary {
                stderrs: fit.stderrs,
                loglik: fit.loglik,
                n_obs: fit.n_obs,
                converged: fit.converged,
                iterations: fit.iterations,
                warnings: fit.warnings,
            }),
            tail: Some(tail),
            gpd_fit: Some(gpd),
            threshold_q: Some(args.threshold_q),
            moment_check: moments,
            sigma_next: path.sigma_next,
            residuals: Some(path.residuals),
        },
        prices,
    })
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let fitted = estimate(&args.input)?;
    let bundle = &fitted.bundle;
    let residuals = bundle.residuals.as_deref().unwrap_or_default();
    let tail = bundle.tail.expect("fit produces a tail");
    let gpd = tail.gpd();
    let mut out = OutDir::create(&args.out_dir)?;
    out.json("model.json", bundle)?;

    let max_lag = args.max_lag.min(residuals.len().saturating_sub(1)).max(1);
    let squared: Vec<f64> = residuals.iter().map(|z| z * z).collect();
    let series: [(&str, &[f64]); 3] = [
        ("losses", &fitted.losses),
        ("residuals", residuals),
        ("squared_residuals", &squared),
    ];
    let mut acfs = Vec::new();
    let mut boxes = Vec::new();
    for (name, x) in series {
        acfs.push((name, sample_acf(x, max_lag).map_err(CliError::from)?));
        for h in LJUNG_BOX_LAGS.into_iter().filter(|&h| h <= max_lag) {
            boxes.push((name, ljung_box(x, h).map_err(CliError::from)?));
        }
    }

    let mut positive: Vec<f64> = residuals.iter().copied().filter(|&z| z >= 0.0).collect();
    positive.sort_by(f64::total_cmp);
    let thresholds: Vec<f64> = (0..MEAN_EXCESS_POINTS)
        .map(|i| {
            let level = i as f64 / MEAN_EXCESS_POINTS as f64;
            positive[((positive.len() - 1) as f64 * level).floor() as usize]
        })
        .collect();
    let mean_excess = if positive.is_empty() {
        Vec::new()
    } else {
        mean_excess_curve(&positive, &thresholds)
    };
    let qq = qq_points(residuals, tail.u(), &gpd);

    match args.format {
        OutputFormat::Csv => {
            let dates = &fitted.prices.dates()[1..];
            out.text(
                "residuals.csv",
                &columns_csv(
                    &["t", "date", "loss", "sigma", "residual"],
                    (0..residuals.len()).map(|t| {
                        vec![
                            (t + 1).to_string(),
                            dates[t].clone(),
                            fmt(fitted.losses[t]),
                            fmt(fitted.sigmas[t]),
                            fmt(residuals[t]),
                        ]
                    }),
                ),
            )?;
            for (name, acf) in &acfs {
                out.text(
                    &format!("acf_{name}.csv"),
                    &columns_csv(
                        &["lag", "acf"],
                        acf.iter()
                            .enumerate()
                            .map(|(k, v)| vec![k.to_string(), fmt(*v)]),
                    ),
                )?;
            }
            out.text(
                "ljung_box.csv",
                &columns_csv(
                    &["series", "lags", "statistic", "p_value"],
                    boxes.iter().map(|(n, b)| {
                        vec![
                            n.to_string(),
                            b.lags.to_string(),
                            fmt(b.statistic),
                            fmt(b.p_value),
                        ]
                    }),
                ),
            )?;
            out.text(
                "mean_excess.csv",
                &columns_csv(
                    &["threshold", "mean_excess", "count", "flagged"],
                    mean_excess.iter().map(|p| {
                        vec![
                            fmt(p.u),
                            fmt(p.mean_excess),
                            p.count.to_string(),
                            p.flagged.to_string(),
                        ]
                    }),
                ),
            )?;
            out.text(
                "qq_gpd.csv",
                &columns_csv(
                    &["fitted", "empirical"],
                    qq.iter().map(|(f, e)| vec![fmt(*f), fmt(*e)]),
                ),
            )?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Acf<'a> {
                series: &'a str,
                acf: &'a [f64],
            }
            #[derive(Serialize)]
            struct Lb<'a> {
                series: &'a str,
                #[serde(flatten)]
                test: tcrisk::timeseries::LjungBox,
            }
            #[derive(Serialize)]
            struct Diagnostics<'a> {
                acf: Vec<Acf<'a>>,
                ljung_box: Vec<Lb<'a>>,
                mean_excess: &'a [tcrisk::evt::MeanExcessPoint],
                qq_gpd: &'a [(f64, f64)],
            }
            out.json(
                "diagnostics.json",
                &Diagnostics {
                    acf: acfs
                        .iter()
                        .map(|(s, a)| Acf { series: s, acf: a })
                        .collect(),
                    ljung_box: boxes
                        .iter()
                        .map(|(s, b)| Lb {
                            series: s,
                            test: *b,
                        })
                        .collect(),
                    mean_excess: &mean_excess,
                    qq_gpd: &qq,
                },
            )?;
        }
    }
    out.finish("fit", args)?;

    let p = &bundle.garch;
    println!(
        "GARCH(1,1): a0 = {:.4e}, a1 = {:.4}, b = {:.4}; sigma_next = {:.6}",
        p.a0(),
        p.a1(),
        p.b(),
        bundle.sigma_next
    );
    println!(
        "tail: u = {:.4}, F(u) = {:.4}, xi = {:.4}, beta = {:.4}",
        tail.u(),
        tail.fu(),
        gpd.xi(),
        gpd.beta()
    );
    if !fitted.converged {
        return Err(CliError::fit(
            "optimizer did not converge; best point written with diagnostics",
        ));
    }
    Ok(())
}

fn model_for(args: &ModelArgs) -> Result<ModelBundle, CliError> {
    let mut bundle = match &args.model {
        Some(path) => ModelBundle::load(path)?,
        None => {
            if args.input.input.is_none() {
                return Err(CliError::usage("either --model or --input is required"));
            }
            let fitted = estimate(&args.input)?;
            if !fitted.converged {
                return Err(CliError::fit("optimizer did not converge"));
            }
            fitted.bundle
        }
    };
    if let Some(s) = args.sigma_next {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::usage("--sigma-next must be positive"));
        }
        bundle.sigma_next = s;
    }
    Ok(bundle)
}

#[derive(Serialize)]
struct ScalingRow {
    alpha: f64,
    m: usize,
    one_day_var: f64,
    sqrt_scaled: f64,
    tc_var_aggregate: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct TableDocument<'a> {
    version: &'static str,
    garch: &'a GarchParams,
    tail: Option<&'a TailModel>,
    noise: NoiseKind,
    sigma_next: f64,
    mc: McOptions,
    tables: &'a [RiskTable],
    sqrt_scaling: &'a [ScalingRow],
}

pub fn risk_table(args: &TableArgs) -> Result<(), CliError> {
    let alphas = parse_alphas(&args.alphas)?;
    let measures = parse_measures(&args.measures)?;
    if args.m_max == 0 {
        return Err(CliError::usage("--m-max must be at least 1"));
    }
    let bundle = model_for(&args.model)?;
    let noise = bundle.noise(args.model.noise)?;
    let noise: &dyn NoiseModel = noise.as_ref();
    let mc = McOptions {
        draws: args.draws,
        seed: args.seed,
    };
    let tables = build_risk_table(
        &alphas,
        args.m_max,
        bundle.sigma_next,
        bundle.garch,
        noise,
        &measures,
        &mc,
    )?;

    let scaling: Vec<ScalingRow> = alphas
        .iter()
        .map(|&a| {
            let q1 = RiskQuery::new(a, 1, bundle.sigma_next, bundle.garch, noise)?;
            let qm = q1.with_horizon(args.m_max)?;
            let var1 = one_day_var(&q1);
            let agg = tc_var_aggregate(&qm);
            let scaled = sqrt_scaling(var1, args.m_max);
            Ok(ScalingRow {
                alpha: a,
                m: args.m_max,
                one_day_var: var1,
                sqrt_scaled: scaled,
                tc_var_aggregate: agg,
                ratio: agg / scaled,
            })
        })
        .collect::<tcrisk::Result<_>>()?;

    let mut out = OutDir::create(&args.out_dir)?;
    if args.format == OutputFormat::Csv {
        for t in &tables {
            let tag = t.measure.tag();
            out.text(
                &format!("{tag}_single.csv"),
                &grid_to_csv(&t.alphas, &t.single),
            )?;
            if let Some(agg) = &t.aggregate {
                let name = if t.aggregate_is_weak {
                    format!("{tag}_aggregate_weak.csv")
                } else {
                    format!("{tag}_aggregate.csv")
                };
                out.text(&name, &grid_to_csv(&t.alphas, agg))?;
            }
        }
        out.text(
            "sqrt_scaling.csv",
            &columns_csv(
                &[
                    "alpha",
                    "m",
                    "one_day_var",
                    "sqrt_scaled",
                    "tc_var_aggregate",
                    "ratio",
                ],
                scaling.iter().map(|r| {
                    vec![
                        r.alpha.to_string(),
                        r.m.to_string(),
                        format!("{:.4}", r.one_day_var),
                        format!("{:.4}", r.sqrt_scaled),
                        format!("{:.4}", r.tc_var_aggregate),
                        format!("{:.2}", r.ratio),
                    ]
                }),
            ),
        )?;
    }
    out.json(
        "risk_tables.json",
        &TableDocument {
            version: env!("CARGO_PKG_VERSION"),
            garch: &bundle.garch,
            tail: bundle.tail.as_ref(),
            noise: args.model.noise,
            sigma_next: bundle.sigma_next,
            mc,
            tables: &tables,
            sqrt_scaling: &scaling,
        },
    )?;
    out.finish("risk-table", args)?;
    for r in &scaling {
        println!(
            "alpha {}: {}-day tcVaR aggregate {:.4} vs sqrt scaling {:.4} (ratio {:.2})",
            r.alpha, r.m, r.tc_var_aggregate, r.sqrt_scaled, r.ratio
        );
    }
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    let alphas = parse_alphas(&args.alphas)?;
    if args.draws < 2 {
        return Err(CliError::usage("--draws must be at least 2"));
    }
    let bundle = model_for(&args.model)?;
    let noise = bundle.noise(args.model.noise)?;
    let report = run_verification(
        &bundle.garch,
        bundle.sigma_next,
        noise.as_ref(),
        &alphas,
        args.m_max,
        args.draws,
        args.seed,
    )?;
    let mut out = OutDir::create(&args.out_dir)?;
    out.json("verification.json", &report)?;
    out.finish("verify", args)?;
    for c in &report.checks {
        let status = match (c.kind, c.pass) {
            (CheckKind::Demonstration, _) => "info",
            (_, true) => "pass",
            (_, false) => "FAIL",
        };
        let z = c.z.map_or("-".to_string(), |z| format!("{z:+.2}"));
        println!(
            "{status:>4}  {:<26} alpha={:<6} m={:<2} z={z}",
            c.name, c.alpha, c.m
        );
    }
    if report.all_pass {
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_VERIFY,
            message: "verification failed: at least one |z| >= 4".into(),
        })
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let (params, bundle) = match &args.model {
        Some(path) => {
            let b = ModelBundle::load(path)?;
            (b.garch, Some(b))
        }
        None => (GarchParams::new(args.a0, args.a1, args.b)?, None),
    };
    let noise: Box<dyn NoiseModel> = match (&bundle, args.noise) {
        (Some(b), kind) => b.noise(kind)?,
        (None, NoiseKind::Normal) => Box::new(tcrisk::evt::StandardNormalNoise),
        (None, NoiseKind::Spliced) => {
            return Err(CliError::usage("--noise spliced needs --model"));
        }
    };
    if !(args.start_price > 0.0 && args.start_price.is_finite()) {
        return Err(CliError::usage("--start-price must be positive"));
    }
    let sigma0_sq = match args.sigma0_sq {
        Some(v) => v,
        None => params.unconditional_variance().ok_or_else(|| {
            CliError::usage("model is not stationary; pass --sigma0-sq explicitly")
        })?,
    };
    let sim = simulate_path(&params, noise.as_ref(), args.n, args.seed, sigma0_sq)?;
    let losses = sim.losses.as_slice();
    let mut price = args.start_price;
    let mut prices = vec![price];
    for l in losses {
        price *= (-l).exp();
        prices.push(price);
    }
    let mut out = OutDir::create(&args.out_dir)?;
    out.text(
        "prices.csv",
        &columns_csv(
            &["date", "price"],
            prices
                .iter()
                .enumerate()
                .map(|(i, p)| vec![i.to_string(), fmt(*p)]),
        ),
    )?;
    let sigmas = sim.path.sigmas();
    out.text(
        "simulated_path.csv",
        &columns_csv(
            &["t", "loss", "sigma", "z"],
            (0..losses.len()).map(|t| {
                vec![
                    (t + 1).to_string(),
                    fmt(losses[t]),
                    fmt(sigmas[t]),
                    fmt(sim.path.residuals[t]),
                ]
            }),
        ),
    )?;
    out.finish("simulate", args)?;
    println!(
        "simulated {} losses; sigma_next = {:.6}",
        losses.len(),
        sim.path.sigma_next
    );
    Ok(())
}
