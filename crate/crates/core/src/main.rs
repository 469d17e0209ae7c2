use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use satcomp::error::Error;
use satcomp::harness::{load_scenario, run_experiment, summarize, Algorithm, ExperimentId, ExperimentSpec, RunOptions};
use satcomp::oracle::OracleCheck;

#[derive(Parser)]
#[command(name = "satcomp", version, about = "Satellite-terrestrial edge computing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV results.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        experiment: String,
        /// Trials per sweep point.
        #[arg(long)]
        seeds: usize,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated algorithm tags (ao, ftp, zfbf, ro, acr, hco).
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<String>>,
        /// Sweep axis for custom experiments, `name=v1,v2,...`; repeatable.
        #[arg(long = "axis")]
        axes: Vec<String>,
        /// Fill the wall-clock column (output is then not reproducible).
        #[arg(long)]
        wallclock: bool,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        verbose: bool,
    },
    /// Parse and validate a scenario file.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run an oracle suite.
    Oracle {
        #[arg(long)]
        check: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

enum Failure {
    Validation(Error),
    Assertion(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ParseError(_) | Error::ValidationError { .. } => Failure::Validation(e),
            e => Failure::Runtime(e),
        }
    }
}

fn parse_axis(text: &str) -> Result<satcomp::harness::Axis, Error> {
    let bad = |reason: &str| Error::ValidationError { field: "axis".into(), reason: format!("{reason} in `{text}`") };
    let (name, values) = text.split_once('=').ok_or_else(|| bad("expected name=v1,v2"))?;
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad("bad number")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(satcomp::harness::Axis { name: name.trim().to_string(), values })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { scenario, experiment, seeds, out, algorithms, axes, wallclock, threads, .. } => {
            let config = load_scenario(&scenario)?;
            let id: ExperimentId = experiment.parse()?;
            let mut spec = ExperimentSpec::preset(id, seeds);
            if let Some(tags) = algorithms {
                spec.algorithms = tags.iter().map(|t| t.trim().parse()).collect::<Result<Vec<Algorithm>, _>>()?;
            }
            if !axes.is_empty() {
                if id != ExperimentId::Custom {
                    return Err(Failure::Validation(Error::ValidationError {
                        field: "axis".into(),
                        reason: "axes can only be given for the custom experiment".into(),
                    }));
                }
                spec.axes = axes.iter().map(|a| parse_axis(a)).collect::<Result<_, _>>()?;
            }
            spec.validate()?;
            let mut opts = RunOptions { record_wallclock: wallclock, ..RunOptions::default() };
            if let Some(t) = threads {
                opts.threads = t.max(1);
            }
            let rows = run_experiment(&spec, &config, &out, &opts)?;
            for s in summarize(&rows)? {
                let mean = s.mean.map(|m| format!("{m:.6}")).unwrap_or_else(|| "-".into());
                println!("{:<5} point {:>3} {:?}: mean xi {mean} J over {} (+{} infeasible)", s.algorithm, s.point, s.coords, s.count, s.infeasible);
            }
            if spec.id == ExperimentId::Convergence {
                let broken: Vec<_> = rows
                    .iter()
                    .filter(|r| r.trace.as_ref().is_some_and(|t| !t.is_monotone(1e-6)))
                    .map(|r| format!("point {} trial {}", r.point, r.trial))
                    .collect();
                if !broken.is_empty() {
                    return Err(Failure::Assertion(format!("objective increased in {}", broken.join(", "))));
                }
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Validate { scenario } => {
            let config = load_scenario(&scenario)?;
            println!(
                "ok: K={} L={} M={} N={} Nt={}/{} Z={}/{} s",
                config.k, config.l, config.m, config.n, config.nt_g, config.nt_s, config.z_g, config.z_s
            );
            Ok(())
        }
        Command::Oracle { check, seed } => {
            let check: OracleCheck = check.parse()?;
            let report = check.run(seed)?;
            println!("{report}");
            for f in report.failures.iter().take(10) {
                println!("  {f}");
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Assertion(format!("{check} oracle failed")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verbose = matches!(cli.command, Command::Run { verbose: true, .. });
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if verbose { "debug" } else { "warn" })).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("validation error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
