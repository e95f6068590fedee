//! Command line: `adiavac run --config <path> --suite <name> [--out <dir>]`
//! and `adiavac validate --config <path>`.
//!
//! The worker thread count is taken from `ADIAVAC_THREADS` when set.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::suites::{run_suite, Artifacts, FileEntry, Suite, SuiteReport};

pub const THREADS_ENV: &str = "ADIAVAC_THREADS";
pub const MANIFEST: &str = "manifest.json";
const DEFAULT_OUT: &str = "adiavac-out";

#[derive(Debug, Parser)]
#[command(name = "adiavac", version, about = "Adiabatic vacua on closed Robertson-Walker spacetimes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment suite and write CSV results plus a JSON manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        suite: Suite,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub code_version: &'static str,
    pub config: Value,
    pub suite: &'static str,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
    pub files: Vec<FileEntry>,
}

/// Runs `suite` and writes its artifacts and the manifest into `out`.
pub fn run(cfg: &ExperimentConfig, suite: Suite, out: &Path) -> Result<Manifest> {
    let mut artifacts = Artifacts::new(out)?;
    let selected: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    let mut reports = Vec::new();
    for s in selected {
        let mut r = run_suite(cfg, s, &mut artifacts);
        if r.skipped && suite != Suite::All {
            r.passed = false;
            r.error = Some(format!("suite {} needs its config section", s.name()));
        }
        reports.push(r);
    }
    let config = serde_json::to_value(cfg).map_err(|e| Error::Io(e.to_string()))?;
    let manifest = Manifest {
        code_version: env!("CARGO_PKG_VERSION"),
        config,
        suite: suite.name(),
        passed: reports.iter().all(|r| r.passed),
        suites: reports,
        files: artifacts.files.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(artifacts.dir().join(MANIFEST), text + "\n")?;
    Ok(manifest)
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // fails only if the pool was already built, in which case it is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Entry point of the binary; returns the process exit status.
pub fn main() -> i32 {
    let cli = Cli::parse();
    configure_threads();
    match cli.command {
        Command::Validate { config } => match ExperimentConfig::load(&config) {
            Ok(_) => {
                println!("{}: ok", config.display());
                0
            }
            Err(e) => {
                eprintln!("{}: {e}", config.display());
                2
            }
        },
        Command::Run { config, suite, out } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return 2;
                }
            };
            let out = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            match run(&cfg, suite, &out) {
                Ok(m) => {
                    for r in &m.suites {
                        let status = if r.skipped {
                            "skipped"
                        } else if r.passed {
                            "pass"
                        } else {
                            "FAIL"
                        };
                        println!("{:<18} {status}", r.suite);
                        for c in r.checks.iter().filter(|c| !c.passed) {
                            eprintln!("  {}: {:e} not {} {:e}", c.name, c.value, c.relation, c.threshold);
                        }
                        if let Some(e) = &r.error {
                            eprintln!("  error: {e}");
                        }
                    }
                    println!("manifest: {}", out.join(MANIFEST).display());
                    if m.passed {
                        0
                    } else {
                        1
                    }
                }
                Err(e) => {
                    eprintln!("{e}");
                    2
                }
            }
        }
    }
}
