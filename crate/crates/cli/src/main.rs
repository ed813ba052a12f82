//! Command-line driver for NRC scenarios and parameter sweeps.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nrc_core::harness::{
    OutputFormat, SweepParam, SweepPlan, preset, run_scenario, run_sweep, write_records,
};
use nrc_core::{MetricsRecord, NrcError, ScenarioConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "nrc",
    version,
    about = "Channel non-reciprocity estimation and precoding simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep one parameter, either from a preset or explicitly.
    Sweep {
        #[arg(long, conflicts_with_all = ["param", "values"])]
        preset: Option<String>,
        #[arg(long, requires = "values")]
        param: Option<String>,
        /// Comma-separated parameter values.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            requires = "param"
        )]
        values: Option<Vec<f64>>,
        /// Base config; the baseline settings when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the trial count.
    #[arg(long)]
    trials: Option<usize>,
}

impl Common {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
    }
}

fn load(path: Option<&PathBuf>) -> Result<ScenarioConfig, NrcError> {
    match path {
        Some(p) => ScenarioConfig::from_path(p),
        None => Ok(ScenarioConfig::default()),
    }
}

fn execute(command: Command) -> Result<(), NrcError> {
    let (records, common) = match command {
        Command::Simulate { config, common } => {
            let mut cfg = ScenarioConfig::from_path(&config)?;
            common.apply(&mut cfg);
            cfg.validate()?;
            let format: OutputFormat = common.format.parse()?;
            let records = with_workers(common.workers, || run_scenario(&cfg))?;
            (records, (common, format))
        }
        Command::Sweep {
            preset: name,
            param,
            values,
            config,
            common,
        } => {
            let mut base = load(config.as_ref())?;
            common.apply(&mut base);
            let format: OutputFormat = common.format.parse()?;
            let plan = match (name, param, values) {
                (Some(name), _, _) => preset(&name, &base)?,
                (None, Some(param), Some(values)) => {
                    SweepPlan::single(base, param.parse::<SweepParam>()?, values)
                }
                _ => {
                    return Err(NrcError::Config(
                        "sweep needs --preset or --param with --values".into(),
                    ));
                }
            };
            if plan.values.is_empty() {
                return Err(NrcError::Config("sweep needs at least one value".into()));
            }
            let records = with_workers(common.workers, || run_sweep(&plan))?;
            (records, (common, format))
        }
    };
    emit(&records, common.1, common.0.out.as_ref())
}

fn with_workers<T: Send>(
    workers: Option<usize>,
    job: impl FnOnce() -> Result<T, NrcError> + Send,
) -> Result<T, NrcError> {
    match workers {
        Some(0) => Err(NrcError::Config("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| NrcError::Config(e.to_string()))?
            .install(job),
        None => job(),
    }
}

fn emit(
    records: &[MetricsRecord],
    format: OutputFormat,
    out: Option<&PathBuf>,
) -> Result<(), NrcError> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_records(records, format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            write_records(records, format, stdout.lock())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_NUMERICAL)
            }
        }
    }
}
