//! Command-line frontend.

use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use intermit_core::bessel::simulate_skew_path;
use intermit_core::limits::{sample_zg_joint, StableParams};
use intermit_core::return_map::sample_stationary_excursions;
use thiserror::Error;

use crate::config::{Config, ConfigError, InitialLaw};
use crate::export;
use crate::harness::{self, marginal_times, stream, tag, HarnessError, Runner, Setup};
use crate::report::{write_reports, StatReport};

const AFTER_HELP: &str = "\
Output files (CSV, one header line):
  simulate-map     map.csv         t,s_a1..s_ad,s_y,g_y,d_y
  excursions       excursions.csv  k,phi,ray,steps
  simulate-bessel  bessel.csv      t,modulus,ray,L
  sample-limits    limits.csv      z1..zd,l,g,d,zg1..zgd
  verify           report.csv, report.jsonl, config.cfg

Rays are numbered from 1; empty cells mark undefined values.
Exit codes: 0 success, 1 failed checks or runtime error, 2 usage, 3 configuration.
INTERMIT_THREADS caps the worker threads; results do not depend on it.";

#[derive(Debug, Parser)]
#[command(name = "intermit", version, about = "Occupation times of intermittent maps and their skew Bessel limits")]
#[command(after_help = AFTER_HELP)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (`key = value` lines); defaults apply without one.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set marginal.n=1000`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out", global = true)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Occupation times of one orbit on an evenly spaced time grid.
    SimulateMap {
        #[arg(long, default_value = "uniform")]
        law: InitialLaw,
        /// Replica index (selects the random stream).
        #[arg(long, default_value_t = 0)]
        replica: u64,
        /// Number of grid intervals on [0, marginal.n].
        #[arg(long, default_value_t = 100)]
        points: u64,
    },
    /// I.i.d. excursions entered from the invariant measure on Y.
    Excursions {
        /// Number of excursions (default tail.returns).
        #[arg(long)]
        count: Option<usize>,
    },
    /// One path of the skew Bessel diffusion (construction B).
    SimulateBessel {
        #[arg(long, default_value_t = 0)]
        replica: u64,
    },
    /// Exact samples of the time-1 limit vector.
    SampleLimits {
        #[arg(long)]
        alpha: Option<f64>,
        /// Ray weights, comma separated.
        #[arg(long, value_delimiter = ',')]
        beta: Option<Vec<f64>>,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// Run experiments and write the statistical report.
    Verify {
        /// Comma-separated subset of identity, marginal, functional, tail, limits, laws.
        #[arg(long, value_delimiter = ',')]
        experiments: Option<Vec<String>>,
    },
    /// Summarize a report written by `verify`.
    Report {
        /// Directory holding report.jsonl (default: --out).
        dir: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Limits(#[from] intermit_core::limits::LimitsError),
    #[error(transparent)]
    Bessel(#[from] intermit_core::bessel::BesselError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("{path}: malformed report line {line}")]
    BadReport { path: PathBuf, line: usize },
    #[error("some checks failed")]
    Failed,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::UnknownExperiment(_) => 3,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn create(dir: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    let f = File::create(&path).map_err(io_err(&path))?;
    Ok((BufWriter::new(f), path))
}

fn load_config(common: &Common) -> Result<Config, CliError> {
    let cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    Ok(cfg.with_overrides(&common.overrides)?)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let common = &cli.common;
    let out = &common.out;
    if let Command::Report { dir } = &cli.command {
        return summarize(dir.as_deref().unwrap_or(out));
    }
    let cfg = load_config(common)?;
    let runner = Runner::from_env()?;
    match cli.command {
        Command::SimulateMap { law, replica, points } => {
            let setup = Setup::new(&cfg)?;
            let n = cfg.marginal.n;
            let times = marginal_times(n, points);
            let rec = harness::simulate_orbit(&cfg, &setup, tag::EXPORT, law, n, &times, replica)?;
            let (w, path) = create(out, "map.csv")?;
            export::write_map_path(w, &rec).map_err(io_err(&path))?;
            println!("wrote {}", path.display());
        }
        Command::Excursions { count } => {
            let setup = Setup::new(&cfg)?;
            let mut rng = stream(cfg.seed, tag::EXPORT, 0);
            let count = count.unwrap_or(cfg.tail.returns);
            let trace = sample_stationary_excursions(&setup.map, &setup.cells, &setup.sampler, count, &mut rng);
            let (w, path) = create(out, "excursions.csv")?;
            export::write_excursions(w, &trace).map_err(io_err(&path))?;
            println!("wrote {}", path.display());
        }
        Command::SimulateBessel { replica } => {
            let params = harness::limit_params(&cfg)?;
            let mut rng = stream(cfg.seed, tag::CONSTRUCTION_B, replica);
            let b = &cfg.bessel;
            let p = simulate_skew_path(&params, b.dt, b.eps, b.horizon, &mut rng)?;
            let (w, path) = create(out, "bessel.csv")?;
            export::write_bessel_path(w, &p).map_err(io_err(&path))?;
            println!("wrote {}", path.display());
        }
        Command::SampleLimits { alpha, beta, n } => {
            let defaults = harness::limit_params(&cfg)?;
            let alpha = alpha.unwrap_or(defaults.alpha());
            let beta = beta.unwrap_or_else(|| defaults.beta().to_vec());
            let params = StableParams::new(alpha, beta).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            let mut rng = stream(cfg.seed, tag::EXACT, 1);
            let samples = sample_zg_joint(&params, n, cfg.limits.pool_factor, &mut rng)?;
            let (w, path) = create(out, "limits.csv")?;
            export::write_limit_samples(w, params.rays(), &samples).map_err(io_err(&path))?;
            println!("wrote {}", path.display());
        }
        Command::Verify { experiments } => {
            let names: Vec<String> = experiments.unwrap_or_else(|| harness::EXPERIMENTS.iter().map(|s| s.to_string()).collect());
            if let Some(bad) = names.iter().find(|n| !harness::EXPERIMENTS.contains(&n.as_str())) {
                return Err(CliError::UnknownExperiment(bad.clone()));
            }
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            let reports = harness::run_experiments(&cfg, &names, &runner)?;
            write_reports(out, &reports, cfg.report_runtime).map_err(io_err(out))?;
            let (mut w, path) = create(out, "config.cfg")?;
            w.write_all(cfg.to_text().as_bytes()).map_err(io_err(&path))?;
            return print_reports(&reports);
        }
        Command::Report { .. } => unreachable!(),
    }
    Ok(())
}

fn print_reports(reports: &[StatReport]) -> Result<(), CliError> {
    for r in reports {
        for t in &r.tests {
            println!("{:<11} {}", r.experiment, t.summary());
        }
    }
    let failed = reports.iter().flat_map(|r| &r.tests).filter(|t| !t.pass).count();
    let total: usize = reports.iter().map(|r| r.tests.len()).sum();
    println!("{} of {total} checks passed", total - failed);
    if failed > 0 {
        Err(CliError::Failed)
    } else {
        Ok(())
    }
}

fn summarize(dir: &Path) -> Result<(), CliError> {
    let path = dir.join("report.jsonl");
    let f = File::open(&path).map_err(io_err(&path))?;
    let (mut total, mut failed) = (0, 0);
    for (i, line) in io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(&path))?;
        let v: serde_json::Value =
            serde_json::from_str(&line).map_err(|_| CliError::BadReport { path: path.clone(), line: i + 1 })?;
        let pass = v["pass"].as_bool().ok_or_else(|| CliError::BadReport { path: path.clone(), line: i + 1 })?;
        total += 1;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:<11} {} statistic={} threshold={}",
            if pass { "PASS" } else { "FAIL" },
            v["experiment"].as_str().unwrap_or(""),
            v["name"].as_str().unwrap_or(""),
            v["statistic"],
            v["threshold"]
        );
    }
    println!("{} of {total} checks passed", total - failed);
    if failed > 0 {
        Err(CliError::Failed)
    } else {
        Ok(())
    }
}

/// Parses arguments, runs, and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
