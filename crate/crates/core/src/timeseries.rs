//! Price ingestion, the loss transform and serial-dependence diagnostics.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::chi_square_cdf;

/// Which CSV column to read.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ColumnSpec {
    /// Last column whose first data value is numeric.
    #[default]
    Auto,
    Index(usize),
    Name(String),
}

impl std::str::FromStr for ColumnSpec {
    type Err = std::convert::Infallible;

    /// Integers select by zero-based index, anything else by header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim() {
            "" | "auto" => ColumnSpec::Auto,
            t => match t.parse::<usize>() {
                Ok(i) => ColumnSpec::Index(i),
                Err(_) => ColumnSpec::Name(t.to_string()),
            },
        })
    }
}

#[derive(Debug, Clone)]
pub struct CsvFormat {
    pub delimiter: u8,
    /// `None` auto-detects: the first row is a header when none of its fields
    /// parses as a number.
    pub has_header: Option<bool>,
    /// `None` picks a header column named `date` when there is one,
    /// otherwise dates are synthesized as `0..n`.
    pub date_column: Option<ColumnSpec>,
}

impl Default for CsvFormat {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: None,
            date_column: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    dates: Vec<String>,
    prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<String>, prices: Vec<f64>) -> Result<Self> {
        if prices.len() < 2 {
            return Err(Error::TooFewObservations {
                needed: 2,
                got: prices.len(),
            });
        }
        if dates.len() != prices.len() {
            return Err(Error::invalid("dates and prices differ in length"));
        }
        if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::BadRow {
                row: i + 1,
                reason: format!("price {} is not strictly positive", prices[i]),
            });
        }
        if let Some(i) = first_non_increasing(&dates) {
            return Err(Error::BadRow {
                row: i + 1,
                reason: format!("date '{}' does not follow '{}'", dates[i], dates[i - 1]),
            });
        }
        Ok(Self { dates, prices })
    }

    /// Prices labelled `0..n`.
    pub fn from_prices(prices: Vec<f64>) -> Result<Self> {
        let dates = (0..prices.len()).map(|i| i.to_string()).collect();
        Self::new(dates, prices)
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Labels are compared numerically when all of them parse as numbers and
/// lexicographically otherwise (ISO dates sort correctly either way).
fn first_non_increasing(dates: &[String]) -> Option<usize> {
    let numeric: Option<Vec<f64>> = dates.iter().map(|d| d.trim().parse::<f64>().ok()).collect();
    match numeric {
        Some(v) => (1..v.len()).find(|&i| v[i] <= v[i - 1]),
        None => (1..dates.len()).find(|&i| dates[i] <= dates[i - 1]),
    }
}

/// Daily negative log-returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LossSeries {
    losses: Vec<f64>,
}

impl LossSeries {
    pub fn new(losses: Vec<f64>) -> Result<Self> {
        if losses.is_empty() {
            return Err(Error::TooFewObservations { needed: 1, got: 0 });
        }
        if let Some(i) = losses.iter().position(|l| !l.is_finite()) {
            return Err(Error::invalid(format!("loss {i} is not finite")));
        }
        Ok(Self { losses })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.losses
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.losses
    }
}

pub fn load_prices(path: &Path, column: &ColumnSpec, format: &CsvFormat) -> Result<PriceSeries> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_prices(file, column, format)
}

pub fn read_prices<R: std::io::Read>(
    reader: R,
    column: &ColumnSpec,
    format: &CsvFormat,
) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(Error::TooFewObservations { needed: 2, got: 0 });
    }

    let is_number = |s: &str| s.parse::<f64>().is_ok();
    let has_header = format
        .has_header
        .unwrap_or_else(|| !records[0].1.iter().any(is_number));
    let header: Option<Vec<String>> = if has_header {
        Some(records[0].1.iter().map(str::to_string).collect())
    } else {
        None
    };
    let data = if has_header {
        &records[1..]
    } else {
        &records[..]
    };
    if data.is_empty() {
        return Err(Error::TooFewObservations { needed: 2, got: 0 });
    }

    let resolve = |spec: &ColumnSpec| -> Result<usize> {
        match spec {
            ColumnSpec::Index(i) => Ok(*i),
            ColumnSpec::Name(name) => header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c.eq_ignore_ascii_case(name)))
                .ok_or_else(|| Error::invalid(format!("no column named '{name}'"))),
            ColumnSpec::Auto => {
                let fields: Vec<&str> = data[0].1.iter().collect();
                fields
                    .iter()
                    .rposition(|f| is_number(f))
                    .ok_or(Error::NoNumericColumn)
            }
        }
    };
    let price_col = resolve(column)?;
    let date_col = match &format.date_column {
        Some(spec) => Some(resolve(spec)?),
        None => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c.eq_ignore_ascii_case("date")))
            .filter(|&c| c != price_col),
    };

    let mut dates = Vec::with_capacity(data.len());
    let mut prices = Vec::with_capacity(data.len());
    for (i, (line, rec)) in data.iter().enumerate() {
        let raw = rec.get(price_col).unwrap_or("");
        if raw.is_empty() {
            return Err(Error::BadRow {
                row: *line,
                reason: "missing price".into(),
            });
        }
        let price: f64 = raw.parse().map_err(|_| Error::BadRow {
            row: *line,
            reason: format!("price '{raw}' is not numeric"),
        })?;
        if !(price.is_finite() && price > 0.0) {
            return Err(Error::BadRow {
                row: *line,
                reason: format!("price {price} is not strictly positive"),
            });
        }
        let date = match date_col {
            Some(c) => rec.get(c).unwrap_or("").to_string(),
            None => i.to_string(),
        };
        dates.push(date);
        prices.push(price);
    }
    if prices.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: prices.len(),
        });
    }
    if let Some(i) = first_non_increasing(&dates) {
        return Err(Error::BadRow {
            row: data[i].0,
            reason: format!("date '{}' does not follow '{}'", dates[i], dates[i - 1]),
        });
    }
    PriceSeries::new(dates, prices)
}

/// `losses[i] = -ln(p[i+1] / p[i])`.
pub fn to_losses(p: &PriceSeries) -> LossSeries {
    LossSeries {
        losses: p.prices.windows(2).map(|w| -(w[1] / w[0]).ln()).collect(),
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Sample autocorrelations at lags `0..=max_lag`, normalized by the lag-0 sum.
pub fn sample_acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 || x.len() <= max_lag {
        return Err(Error::invalid(format!(
            "need 0 < max_lag < n (max_lag = {max_lag}, n = {})",
            x.len()
        )));
    }
    let m = mean(x);
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let denom: f64 = d.iter().map(|v| v * v).sum();
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::ZeroVariance);
    }
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                d.iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / denom
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LjungBox {
    pub lags: usize,
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ljung_box(x: &[f64], h: usize) -> Result<LjungBox> {
    let acf = sample_acf(x, h)?;
    Ok(ljung_box_from_acf(&acf, x.len(), h))
}

pub(crate) fn ljung_box_from_acf(acf: &[f64], n: usize, h: usize) -> LjungBox {
    let nf = n as f64;
    let q = nf
        * (nf + 2.0)
        * (1..=h)
            .map(|k| acf[k] * acf[k] / (nf - k as f64))
            .sum::<f64>();
    LjungBox {
        lags: h,
        statistic: q,
        p_value: ljung_box_p_value(q, h),
    }
}

/// Upper-tail chi-square probability with `h` degrees of freedom.
pub fn ljung_box_p_value(q: f64, h: usize) -> f64 {
    (1.0 - chi_square_cdf(q, h as f64)).clamp(0.0, 1.0)
}
