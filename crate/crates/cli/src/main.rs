use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use steep_cli::config::{load_config, Config, Format, Grid, Scheme, Suite, SweepSpec, ValidationConfig, DEFAULT_SEED};
use steep_cli::sweep::{run_mc, run_sweep, write_table};
use steep_cli::validation::{run_validation, Status};
use steep_cli::CliError;

/// Secrecy rates of echoed encrypted probes: sweeps, single points, Monte
/// Carlo checks and the validation suites.
#[derive(Parser)]
#[command(name = "steep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Overrides the seed in the config file.
    #[arg(long, global = true, env = "STEEP_SEED")]
    seed: Option<u64>,

    /// Worker threads; 1 runs everything serially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a parameter grid, one row per point.
    Sweep {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Evaluate a single point and print it as JSON.
    Rate {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Run the Monte Carlo oracle at a single point.
    Mc {
        #[command(flatten)]
        point: PointArgs,
        /// Samples (symbols for psteep).
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the validation suites and write a JSON report.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restrict to these suites (repeatable).
        #[arg(long = "suite", value_parser = parse_suite)]
        suites: Vec<Suite>,
        #[arg(long)]
        tolerance_scale: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PointArgs {
    /// JSON sweep document.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    /// `name=value` or `name=lo..hi x10`; repeatable, overrides the config.
    #[arg(long = "param")]
    params: Vec<String>,
}

fn parse_named<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    parse_named(s)
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    parse_named(s)
}

impl PointArgs {
    fn spec(&self, seed: Option<u64>) -> Result<SweepSpec, CliError> {
        let mut spec = match &self.config {
            Some(path) => match load_config(path)? {
                Config::Sweep(s) => s,
                Config::Validation(_) => return Err(CliError::Config(format!("{}: not a sweep document", path.display()))),
            },
            None => {
                let scheme = self.scheme.ok_or_else(|| CliError::Config("either --config or --scheme is required".into()))?;
                SweepSpec::single(scheme, Grid::default(), DEFAULT_SEED)
            }
        };
        if let Some(s) = self.scheme {
            spec.scheme = s;
        }
        for p in &self.params {
            spec.grid.set(p)?;
        }
        if let Some(s) = seed {
            spec.seed = s;
        }
        steep_cli::sweep::plan(&spec)?;
        Ok(spec)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<(), CliError> {
    let mut out = output(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out, "{text}").and_then(|_| out.flush()).map_err(|e| CliError::Io(e.to_string()))
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Sweep { point, out, format } => {
            let mut spec = point.spec(cli.seed)?;
            if out.is_some() {
                spec.output = out;
            }
            if let Some(f) = format {
                spec.format = f;
            }
            let rows = run_sweep(&spec)?;
            let mut w = output(spec.output.as_deref())?;
            write_table(&rows, spec.format, &mut w)?;
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Rate { point } => {
            let spec = point.spec(cli.seed)?;
            steep_cli::sweep::single_point(&spec)?;
            let rows = run_sweep(&spec)?;
            let mut w = output(None)?;
            write_table(&rows, Format::Json, &mut w)?;
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
            match &rows[0].error {
                Some(e) => Err(CliError::Config(e.clone())),
                None => Ok(ExitCode::SUCCESS),
            }
        }
        Command::Mc { point, samples, out } => {
            let spec = point.spec(cli.seed)?;
            let reports = run_mc(&spec, samples)?;
            write_json(&reports, out.as_deref())?;
            let failed = reports.iter().filter(|r| r.failed()).count();
            eprintln!("{} reports, {} gated, {failed} outside 3 standard errors", reports.len(), reports.iter().filter(|r| r.gated()).count());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Validate { config, suites, tolerance_scale, out } => {
            let mut cfg = match &config {
                Some(path) => match load_config(path)? {
                    Config::Validation(v) => v,
                    Config::Sweep(_) => return Err(CliError::Config(format!("{}: not a validation document", path.display()))),
                },
                None => ValidationConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if !suites.is_empty() {
                cfg.suites = suites;
            }
            if let Some(t) = tolerance_scale {
                cfg.tolerance_scale = t;
            }
            cfg.validate()?;
            let report = run_validation(&cfg);
            write_json(&report, out.as_deref())?;
            for c in report.checks.iter().filter(|c| c.status == Status::Fail) {
                eprintln!("FAIL {} {}: value {} reference {} ({})", c.suite, c.name, c.value, c.reference, c.detail);
            }
            let s = &report.summary;
            eprintln!("{} checks: {} passed, {} failed, {} informational", s.total, s.passed, s.failed, s.info);
            if let Some(cal) = &report.oracle_calibration {
                eprintln!(
                    "oracle: {} gated comparisons, {} beyond |z| = {}, chi-square {:.1} on {} dof",
                    cal.gated, cal.beyond_limit, cal.z_limit, cal.chi_square, cal.dof
                );
            }
            Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("steep: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
