use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measures::{
    avar_lower, avar_upper, cumulative_sum, tc_avar_exact_mc, tc_avar_squared, tc_var_single,
    RiskQuery,
};
use crate::error::{Error, Result};
use crate::evt::NoiseModel;
use crate::garch::GarchParams;

pub const DEFAULT_ALPHAS: [f64; 4] = [0.975, 0.98, 0.985, 0.99];
pub const DEFAULT_M_MAX: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "tcVaR")]
    TcVar,
    #[serde(rename = "tcAVaR-upper")]
    TcAvarUpper,
    #[serde(rename = "tcAVaR-lower")]
    TcAvarLower,
    #[serde(rename = "tcAVaR-mc")]
    TcAvarMc,
    #[serde(rename = "tcAVaR-squared")]
    TcAvarSquared,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::TcVar,
        Measure::TcAvarUpper,
        Measure::TcAvarLower,
        Measure::TcAvarMc,
        Measure::TcAvarSquared,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Measure::TcVar => "tcVaR",
            Measure::TcAvarUpper => "tcAVaR-upper",
            Measure::TcAvarLower => "tcAVaR-lower",
            Measure::TcAvarMc => "tcAVaR-mc",
            Measure::TcAvarSquared => "tcAVaR-squared",
        }
    }

    /// Whether the table carries an aggregated (cumulative) column.
    pub fn aggregates(&self) -> bool {
        matches!(
            self,
            Measure::TcVar | Measure::TcAvarUpper | Measure::TcAvarLower
        )
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown measure '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub draws: usize,
    pub seed: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            draws: 100_000,
            seed: 20_190_801,
        }
    }
}

/// Values of one measure on the `horizon × α` grid. Row `i` is horizon `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTable {
    pub measure: Measure,
    pub alphas: Vec<f64>,
    pub m_max: usize,
    pub single: Vec<Vec<f64>>,
    pub aggregate: Option<Vec<Vec<f64>>>,
    /// The aggregated lower AVaR column is not a proven bound.
    pub aggregate_is_weak: bool,
    pub stderr: Option<Vec<Vec<f64>>>,
}

impl RiskTable {
    pub fn single(&self, alpha_idx: usize, m: usize) -> f64 {
        self.single[m - 1][alpha_idx]
    }

    pub fn aggregate(&self, alpha_idx: usize, m: usize) -> Option<f64> {
        self.aggregate.as_ref().map(|a| a[m - 1][alpha_idx])
    }

    pub fn column(&self, alpha_idx: usize) -> Vec<f64> {
        self.single.iter().map(|row| row[alpha_idx]).collect()
    }
}

/// Formats a grid as CSV: header `m,<alphas>`, one row per horizon, values to 4 decimals.
pub fn grid_to_csv(alphas: &[f64], rows: &[Vec<f64>]) -> String {
    let mut out = String::from("m");
    for a in alphas {
        write!(out, ",{a}").unwrap();
    }
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        write!(out, "{}", i + 1).unwrap();
        for v in row {
            write!(out, ",{v:.4}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn cell(measure: Measure, q: &RiskQuery, mc: &McOptions) -> Result<(f64, f64)> {
    Ok(match measure {
        Measure::TcVar => (tc_var_single(q), 0.0),
        Measure::TcAvarUpper => (avar_upper(q)?, 0.0),
        Measure::TcAvarLower => (avar_lower(q)?, 0.0),
        Measure::TcAvarSquared => (tc_avar_squared(q)?, 0.0),
        Measure::TcAvarMc => {
            let e = tc_avar_exact_mc(q, mc.draws, mc.seed)?;
            (e.estimate, e.stderr)
        }
    })
}

/// Evaluates every requested measure on `alphas × 1..=m_max`.
///
/// Cells are computed in parallel; Monte Carlo cells draw from a stream
/// keyed by `(α, m)`, so results match sequential evaluation bit for bit.
pub fn build_risk_table(
    alphas: &[f64],
    m_max: usize,
    sigma_next: f64,
    params: GarchParams,
    noise: &dyn NoiseModel,
    measures: &[Measure],
    mc: &McOptions,
) -> Result<Vec<RiskTable>> {
    if alphas.is_empty() {
        return Err(Error::invalid("no confidence levels requested"));
    }
    if m_max == 0 {
        return Err(Error::invalid("m_max must be at least 1"));
    }
    // Validate every level up front so errors do not depend on scheduling.
    for &a in alphas {
        RiskQuery::new(a, 1, sigma_next, params, noise)?;
    }
    let n_alpha = alphas.len();
    let cells: Vec<(usize, usize, usize)> = (0..measures.len())
        .flat_map(|k| (1..=m_max).flat_map(move |m| (0..n_alpha).map(move |i| (k, m, i))))
        .collect();
    let values: Vec<(f64, f64)> = cells
        .par_iter()
        .map(|&(k, m, i)| {
            let q = RiskQuery::new(alphas[i], m, sigma_next, params, noise)?;
            cell(measures[k], &q, mc)
        })
        .collect::<Result<_>>()?;

    let per_measure = m_max * n_alpha;
    Ok(measures
        .iter()
        .enumerate()
        .map(|(k, &measure)| {
            let block = &values[k * per_measure..(k + 1) * per_measure];
            let single: Vec<Vec<f64>> = block
                .chunks(n_alpha)
                .map(|r| r.iter().map(|c| c.0).collect())
                .collect();
            let aggregate = measure.aggregates().then(|| {
                let cols: Vec<Vec<f64>> = (0..n_alpha)
                    .map(|i| cumulative_sum(&single.iter().map(|r| r[i]).collect::<Vec<_>>()))
                    .collect();
                (0..m_max)
                    .map(|m| cols.iter().map(|c| c[m]).collect())
                    .collect()
            });
            let stderr = (measure == Measure::TcAvarMc).then(|| {
                block
                    .chunks(n_alpha)
                    .map(|r| r.iter().map(|c| c.1).collect())
                    .collect()
            });
            RiskTable {
                measure,
                alphas: alphas.to_vec(),
                m_max,
                single,
                aggregate,
                aggregate_is_weak: measure == Measure::TcAvarLower,
                stderr,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evt::StandardNormalNoise;
    use crate::risk::measures::{one_day_var, tc_var_aggregate};

    fn params() -> GarchParams {
        GarchParams::new(2e-7, 0.0451, 0.9531).unwrap()
    }

    #[test]
    fn one_by_one_table() {
        let t = build_risk_table(
            &[0.975],
            1,
            0.01,
            params(),
            &StandardNormalNoise,
            &[Measure::TcVar],
            &McOptions::default(),
        )
        .unwrap();
        let q = RiskQuery::new(0.975, 1, 0.01, params(), &StandardNormalNoise).unwrap();
        assert_eq!(t[0].single, vec![vec![one_day_var(&q)]]);
    }

    #[test]
    fn aggregate_matches_standalone_function() {
        let t = build_risk_table(
            &DEFAULT_ALPHAS,
            DEFAULT_M_MAX,
            0.01,
            params(),
            &StandardNormalNoise,
            &[Measure::TcVar],
            &McOptions::default(),
        )
        .unwrap();
        for (i, &a) in DEFAULT_ALPHAS.iter().enumerate() {
            for m in 1..=DEFAULT_M_MAX {
                let q = RiskQuery::new(a, m, 0.01, params(), &StandardNormalNoise).unwrap();
                assert_eq!(t[0].aggregate(i, m).unwrap(), tc_var_aggregate(&q));
            }
            let col = t[0].column(i);
            assert!(col.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn parallel_equals_sequential() {
        let mc = McOptions {
            draws: 2000,
            seed: 3,
        };
        let measures = [Measure::TcAvarMc];
        let par = build_risk_table(
            &DEFAULT_ALPHAS,
            4,
            0.01,
            params(),
            &StandardNormalNoise,
            &measures,
            &mc,
        )
        .unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let seq = pool
            .install(|| {
                build_risk_table(
                    &DEFAULT_ALPHAS,
                    4,
                    0.01,
                    params(),
                    &StandardNormalNoise,
                    &measures,
                    &mc,
                )
            })
            .unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn csv_layout() {
        let csv = grid_to_csv(
            &[0.975, 0.99],
            &[vec![0.00641, 0.0088], vec![0.0068, 0.0099]],
        );
        assert_eq!(csv, "m,0.975,0.99\n1,0.0064,0.0088\n2,0.0068,0.0099\n");
    }

    #[test]
    fn measure_tags_round_trip() {
        for m in Measure::ALL {
            assert_eq!(m.tag().parse::<Measure>().unwrap(), m);
            assert_eq!(
                serde_json::to_string(&m).unwrap(),
                format!("\"{}\"", m.tag())
            );
        }
    }
}
