//! Command-line front end: `fit`, `risk-table`, `verify` and `simulate`.

mod bundle;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tcrisk::evt::DEFAULT_THRESHOLD_QUANTILE;
use tcrisk::oracle::{DEFAULT_DRAWS, DEFAULT_SEED};
use tcrisk::risk::{Measure, DEFAULT_ALPHAS, DEFAULT_M_MAX};

pub use bundle::NoiseKind;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_FIT: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn data(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: msg.into(),
        }
    }

    pub fn fit(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_FIT,
            message: msg.into(),
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: msg.into(),
        }
    }
}

impl From<tcrisk::Error> for CliError {
    fn from(e: tcrisk::Error) -> Self {
        use tcrisk::Error as E;
        let code = match e {
            E::NoConvergence { .. }
            | E::Degenerate(_)
            | E::Quadrature(_)
            | E::InfiniteMean { .. }
            | E::SquaredTailUndefined { .. } => EXIT_FIT,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tcrisk",
    version,
    about = "Time-consistent VaR/AVaR for GARCH(1,1) losses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit GARCH(1,1) by QMLE and a GPD tail to the residuals; write the model and diagnostics.
    Fit(FitArgs),
    /// Evaluate risk tables from a fitted model.
    RiskTable(TableArgs),
    /// Run the Monte Carlo checks of every closed form.
    Verify(VerifyArgs),
    /// Simulate a GARCH(1,1) price path.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitArg {
    #[default]
    Unconditional,
    SampleVariance,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Price file (CSV).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Price column: header name or 0-based index. Defaults to the last numeric column.
    #[arg(long)]
    pub column: Option<String>,
    /// Date column: header name or 0-based index.
    #[arg(long)]
    pub date_column: Option<String>,
    /// Field delimiter.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Treat the first row as data even if it looks like a header.
    #[arg(long)]
    pub no_header: bool,
    /// Quantile of the residuals used as GPD threshold.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_QUANTILE)]
    pub threshold_q: f64,
    /// Initial variance of the volatility filter.
    #[arg(long, value_enum, default_value_t = InitArg::Unconditional)]
    pub init: InitArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Largest lag of the autocorrelation and Ljung-Box diagnostics.
    #[arg(long, default_value_t = 20)]
    pub max_lag: usize,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// csv writes one file per table or diagnostic; json writes a single document.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Fitted model file written by `fit`.
    #[arg(long, conflicts_with = "input")]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    /// Noise law: fitted GPD tail with empirical body, or standard normal.
    #[arg(long, value_enum, default_value_t = NoiseKind::Spliced)]
    pub noise: NoiseKind,
    /// Override the model's next-day volatility.
    #[arg(long)]
    pub sigma_next: Option<f64>,
}

fn default_alphas() -> String {
    DEFAULT_ALPHAS.map(|a| a.to_string()).join(",")
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TableArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated confidence levels.
    #[arg(long, default_value_t = default_alphas())]
    pub alphas: String,
    /// Largest horizon in days.
    #[arg(long, default_value_t = DEFAULT_M_MAX)]
    pub m_max: usize,
    /// Comma-separated measures (tcVaR, tcAVaR-upper, tcAVaR-lower, tcAVaR-mc, tcAVaR-squared).
    #[arg(long, value_delimiter = ',')]
    pub measures: Vec<String>,
    /// Monte Carlo draws per cell for tcAVaR-mc.
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    /// Base seed of the random streams.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// csv writes one file per table or diagnostic; json writes a single document.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated confidence levels.
    #[arg(long, default_value_t = default_alphas())]
    pub alphas: String,
    /// Largest horizon of the bound-sandwich checks.
    #[arg(long, default_value_t = DEFAULT_M_MAX)]
    pub m_max: usize,
    /// Monte Carlo draws per check.
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    pub draws: usize,
    /// Base seed of the random streams.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Take parameters (and the spliced noise) from a model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 2e-7)]
    pub a0: f64,
    #[arg(long, default_value_t = 0.0451)]
    pub a1: f64,
    #[arg(long, default_value_t = 0.9531)]
    pub b: f64,
    #[arg(long, value_enum, default_value_t = NoiseKind::Normal)]
    pub noise: NoiseKind,
    /// Number of simulated losses.
    #[arg(long, default_value_t = 7500)]
    pub n: usize,
    /// Initial variance; defaults to the unconditional variance when it exists.
    #[arg(long)]
    pub sigma0_sq: Option<f64>,
    #[arg(long, default_value_t = 100.0)]
    pub start_price: f64,
    /// Base seed of the random streams.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

pub fn parse_alphas(raw: &str) -> Result<Vec<f64>, CliError> {
    let alphas = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::usage(format!("invalid confidence level '{s}'")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if alphas.is_empty() {
        return Err(CliError::usage("no confidence levels given"));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(CliError::usage(format!(
            "confidence level {a} outside (0, 1)"
        )));
    }
    Ok(alphas)
}

pub fn parse_measures(raw: &[String]) -> Result<Vec<Measure>, CliError> {
    if raw.is_empty() {
        return Ok(Measure::ALL.to_vec());
    }
    raw.iter()
        .map(|s| {
            s.parse::<Measure>()
                .map_err(|e| CliError::usage(e.to_string()))
        })
        .collect()
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let result = match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::RiskTable(a) => commands::risk_table(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Simulate(a) => commands::simulate(&a),
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
