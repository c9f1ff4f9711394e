use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use simo_core::harness::verify::{verify, VerifyLevel};
use simo_core::harness::{complexity_specs, figure_specs, run, to_csv, ExperimentSpec, ResultRow};
use simo_core::Error;

/// Worker-count environment variable.
const WORKERS_ENV: &str = "SIMO_WORKERS";

#[derive(Parser)]
#[command(name = "simo", version, about = "Joint ML channel estimation and non-coherent detection simulator")]
struct Cli {
    /// Worker threads (overrides SIMO_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML spec file.
    Simulate {
        spec: PathBuf,
        /// CSV path (default: <name>.csv). The manifest goes next to it.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the pipeline against closed forms and brute force.
    Verify {
        #[arg(long)]
        full: bool,
        /// Perturb the first Cholesky pivot by this amount (the suite should fail).
        #[arg(long, hide = true)]
        inject_fault: Option<f64>,
    },
    /// Run a bundled sweep approximating one of the published figures.
    Figure {
        /// fig2 .. fig9
        name: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Visited-node sweep over the number of receive antennas.
    Complexity {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::InvalidConstellation(_)
            | Error::SearchSpaceTooLarge(_)
            | Error::NonConstantModulus => Failure::Config(e.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    git_commit: String,
    command: String,
    csv: String,
    workers: Option<usize>,
    rows: usize,
    wall_time_s: f64,
    specs: &'a [ExperimentSpec],
}

fn workers(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|e| Failure::Config(format!("{WORKERS_ENV}={v:?}: {e}"))),
        Err(_) => Ok(None),
    }
}

fn git_commit() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn load_spec(path: &Path) -> Result<ExperimentSpec, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let spec: ExperimentSpec = toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

fn run_and_write(specs: &[ExperimentSpec], csv_path: &Path, workers: Option<usize>, command: String) -> Result<(), Failure> {
    for s in specs {
        s.validate()?;
    }
    let start = Instant::now();
    let mut rows: Vec<ResultRow> = Vec::new();
    for s in specs {
        eprintln!("running {} / {} ({} grid points x {} trials)", s.name, s.detector.name(), s.grid().len(), s.trials);
        rows.extend(run(s, workers)?);
    }
    let csv = to_csv(&rows)?;
    std::fs::write(csv_path, csv).map_err(|e| Failure::Check(format!("{}: {e}", csv_path.display())))?;
    let manifest = Manifest {
        tool: "simo",
        version: env!("CARGO_PKG_VERSION"),
        git_commit: git_commit(),
        command,
        csv: csv_path.display().to_string(),
        workers,
        rows: rows.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
        specs,
    };
    let mpath = manifest_path(csv_path);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Check(e.to_string()))?;
    std::fs::write(&mpath, json + "\n").map_err(|e| Failure::Check(format!("{}: {e}", mpath.display())))?;
    println!("wrote {} ({} rows) and {}", csv_path.display(), rows.len(), mpath.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let workers = workers(cli.workers)?;
    match cli.command {
        Command::Simulate { spec, output, trials, seed } => {
            let mut s = load_spec(&spec)?;
            if let Some(t) = trials {
                s.trials = t;
            }
            if let Some(v) = seed {
                s.seed = v;
            }
            let out = output.unwrap_or_else(|| PathBuf::from(format!("{}.csv", s.name)));
            run_and_write(std::slice::from_ref(&s), &out, workers, format!("simulate {}", spec.display()))
        }
        Command::Verify { full, inject_fault } => {
            let level = if full { VerifyLevel::Full } else { VerifyLevel::Quick };
            let report = verify(level, inject_fault)?;
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Check("verification failed".into()))
            }
        }
        Command::Figure { name, trials, output } => {
            let specs = figure_specs(&name, trials)?;
            let out = output.unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
            run_and_write(&specs, &out, workers, format!("figure {name}"))
        }
        Command::Complexity { trials, output } => {
            let specs = complexity_specs(trials);
            let out = output.unwrap_or_else(|| PathBuf::from("complexity.csv"));
            run_and_write(&specs, &out, workers, "complexity".into())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
    }
}
