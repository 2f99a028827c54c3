use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fks_core::blowup::ClassifyCriteria;
use fks_core::cli::{self, KeyValues, RunConfig, Suite, SweepConfig};
use fks_core::integrator::StepMode;
use fks_core::{Error, Result};

/// Fractional Keller-Segel simulation and verification.
#[derive(Parser)]
#[command(name = "fks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write a run directory.
    Simulate(RunFlags),
    /// Run one simulation per value of a swept parameter, in parallel.
    Sweep(RunFlags),
    /// Fit the blow-up ansatz to a run directory or a (t, linf_dxu) CSV.
    Fit {
        /// Run directory or CSV file.
        path: PathBuf,
    },
    /// Evaluate the explicit constants for a parameter file.
    Constants {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output JSON path (default: next to the config file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification suites; exits with status 2 on failure.
    Verify {
        /// Comma-separated suites, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Run keys overriding the simulation-based suites.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunFlags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dealias: bool,
    #[arg(long)]
    integrating_factor: bool,
    /// Snapshot stride in time units.
    #[arg(long)]
    stride: Option<f64>,
}

impl RunFlags {
    fn config_kv(&self) -> Result<KeyValues> {
        self.config
            .as_deref()
            .map_or_else(|| Ok(KeyValues::new()), cli::read_kv)
    }

    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.dealias {
            cfg.dealias = true;
        }
        if self.integrating_factor {
            cfg.integrator.mode = StepMode::IntegratingFactor;
        }
        if let Some(stride) = self.stride {
            cfg.stride = stride;
        }
    }
}

enum Failure {
    Error(Error),
    Assertion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn constants_out(config: Option<&Path>, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| match config {
        Some(p) => p.with_extension("constants.json"),
        None => PathBuf::from("constants.json"),
    })
}

fn execute(cmd: Command) -> std::result::Result<(), Failure> {
    match cmd {
        Command::Simulate(flags) => {
            let mut cfg = RunConfig::from_kv(&flags.config_kv()?)?;
            flags.apply(&mut cfg);
            print_json(&cli::simulate(&cfg)?)?;
        }
        Command::Sweep(flags) => {
            let mut sweep = SweepConfig::from_kv(&flags.config_kv()?)?;
            flags.apply(&mut sweep.base);
            let summary = cli::sweep(&sweep)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            for row in &summary.rows {
                if let Err(e) = &row.result {
                    eprintln!("run {} = {} failed: {e}", summary.param, row.value);
                }
            }
            print_json(&summary)?;
        }
        Command::Fit { path } => {
            let (report, written) = cli::fit(&path, &ClassifyCriteria::default())?;
            eprintln!("wrote {}", written.display());
            print_json(&report)?;
        }
        Command::Constants { config, out } => {
            let kv = config
                .as_deref()
                .map_or_else(|| Ok(KeyValues::new()), cli::read_kv)?;
            let report = cli::constants_from_kv(&kv)?;
            let doc = serde_json::json!({ "inputs": kv, "report": report });
            let path = constants_out(config.as_deref(), out);
            cli::write_json(&path, &doc)?;
            eprintln!("wrote {}", path.display());
            print_json(&doc)?;
        }
        Command::Verify { suite, config, out } => {
            let suites = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                suite
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<Vec<Suite>>>()?
            };
            let overrides = config.as_deref().map(cli::read_kv).transpose()?;
            let report = cli::verify(&suites, overrides.as_ref())?;
            if let Some(out) = out {
                cli::write_json(&out, &report)?;
            }
            print_json(&report)?;
            if !report.passed {
                let failed: Vec<String> = report
                    .results
                    .iter()
                    .flat_map(|r| {
                        r.failed_checks()
                            .into_iter()
                            .map(move |c| format!("{}: {c}", r.suite))
                    })
                    .collect();
                return Err(Failure::Assertion(failed.join("; ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::from(cli::EXIT_OK as u8),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(cli::EXIT_ASSERTION as u8)
        }
    }
}
