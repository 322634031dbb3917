use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fmode::cli::{cmd_converge, cmd_evaluate, cmd_forecast, cmd_simulate, cmd_slice, write_atomic};
use fmode::{Overrides, Predictor, RunConfig, SemiMetric};

#[derive(Parser)]
#[command(name = "fmode", version, about = "Conditional-mode forecasting of functional time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// mode, median or mean.
    #[arg(long, value_parser = parse_predictor)]
    predictor: Option<Predictor>,
    /// sup, inf, integral, wpower or crossing.
    #[arg(long)]
    phi: Option<String>,
    /// Comma-separated candidate k values.
    #[arg(long, value_delimiter = ',')]
    k_grid: Option<Vec<usize>>,
    /// l2 or deriv2.
    #[arg(long, value_parser = parse_semimetric)]
    semimetric: Option<SemiMetric>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Cut a CSV series into daily curves.
    Slice {
        input: PathBuf,
        #[arg(long, default_value_t = 48)]
        period: usize,
        #[arg(long, default_value = "value")]
        column: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a simulated series.
    Simulate(Common),
    /// Forecast the test days of a series.
    Forecast {
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Monthly RAE report from forecast records.
    Evaluate {
        records: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write actual/predicted pairs here.
        #[arg(long)]
        scatter: Option<PathBuf>,
    },
    /// Error of the mode estimate against the true mode as n grows.
    Converge(Common),
}

fn parse_predictor(s: &str) -> Result<Predictor, String> {
    Predictor::parse(s).ok_or_else(|| format!("unknown predictor '{s}'"))
}

fn parse_semimetric(s: &str) -> Result<SemiMetric, String> {
    SemiMetric::parse(s).ok_or_else(|| format!("unknown semi-metric '{s}'"))
}

fn config(c: &Common) -> fmode::Result<RunConfig> {
    let mut cfg = RunConfig::load(c.config.as_deref())?;
    cfg.apply(&Overrides {
        seed: c.seed,
        predictor: c.predictor,
        phi: c.phi.clone(),
        k_grid: c.k_grid.clone(),
        semimetric: c.semimetric,
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> fmode::Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => Ok(std::io::stdout().lock().write_all(bytes)?),
    }
}

fn run(cli: Cli) -> fmode::Result<()> {
    match cli.command {
        Command::Slice { input, period, column, out } => emit(out.as_deref(), &cmd_slice(&input, &column, period)?),
        Command::Simulate(c) => emit(c.out.as_deref(), &cmd_simulate(&config(&c)?)?),
        Command::Forecast { data, common } => emit(common.out.as_deref(), &cmd_forecast(&config(&common)?, &data)?),
        Command::Evaluate { records, out, scatter } => {
            let (report, pairs) = cmd_evaluate(&records)?;
            if let Some(p) = scatter {
                write_atomic(&p, &pairs)?;
            }
            emit(out.as_deref(), &report)
        }
        Command::Converge(c) => emit(c.out.as_deref(), &cmd_converge(&config(&c)?)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("FMODE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
