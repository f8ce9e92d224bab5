mod config;
mod experiments;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

const WORKERS_ENV: &str = "MPNR_LAB_WORKERS";

#[derive(Parser)]
#[command(name = "mpnr-lab", version, about = "Multiplexed photon-number-resolving detector experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config and write its CSV.
    Run {
        config: PathBuf,
        /// Directory for the CSV (default: current directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Size of the worker pool; MPNR_LAB_WORKERS takes precedence.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Recompute the reference scenarios and print PASS/FAIL for each.
    Verify {
        #[arg(long)]
        workers: Option<usize>,
    },
}

/// Process outcome with its exit status.
enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
    Verify(usize),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) | Failure::Verify(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "{m}"),
            Failure::Verify(n) => write!(f, "{n} criteria failed"),
        }
    }
}

impl From<mpnr_core::Error> for Failure {
    fn from(e: mpnr_core::Error) -> Self {
        let op = e.operation();
        let text = e.to_string();
        let msg = if text.starts_with(op) { text } else { format!("{op}: {text}") };
        if e.is_numerical() {
            Failure::Numerical(msg)
        } else {
            Failure::Config(msg)
        }
    }
}

fn worker_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Config(format!("{WORKERS_ENV}={v:?} is not a positive integer"))),
        },
        Err(_) => match flag {
            Some(0) => Err(Failure::Config("--workers must be positive".into())),
            other => Ok(other),
        },
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count(workers)? {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Failure::Io(format!("cannot start worker pool: {e}")))
}

fn run(config: &Path, out: Option<PathBuf>, workers: Option<usize>) -> Result<PathBuf, Failure> {
    let src = std::fs::read_to_string(config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", config.display())))?;
    let cfg = config::parse(&src).map_err(|e| Failure::Config(e.to_string()))?;
    let table = pool(workers)?.install(|| experiments::run(&cfg.plan))?;

    let hash = hex::encode(Sha256::digest(src.as_bytes()));
    let manifest = format!(
        "mpnr-lab {} config-sha256={hash} seed={}",
        env!("CARGO_PKG_VERSION"),
        cfg.seed
    );
    let path = out.unwrap_or_default().join(&cfg.output);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(&path, table.render(&manifest))
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn verify(workers: Option<usize>) -> Result<(), Failure> {
    let ids: Vec<usize> = (1..=mpnr_core::regression::count()).collect();
    let outcomes = pool(workers)?.install(|| {
        use rayon::prelude::*;
        ids.par_iter().map(|&id| mpnr_core::regression::run(id)).collect::<Vec<_>>()
    });
    for o in &outcomes {
        println!("{o}");
    }
    match outcomes.iter().filter(|o| !o.pass).count() {
        0 => Ok(()),
        n => Err(Failure::Verify(n)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, workers } => run(&config, out, workers).map(|p| {
            println!("wrote {}", p.display());
        }),
        Command::Verify { workers } => verify(workers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mpnr-lab: {e}");
            ExitCode::from(e.code())
        }
    }
}
