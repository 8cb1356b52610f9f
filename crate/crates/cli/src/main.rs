//! `kacvortex` command-line runner.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 configuration schema
//! violation, 3 numeric failure (including a failing `verify` battery).

mod config;
mod output;
mod pipelines;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};

use config::{Config, SchemaError};
use output::{Manifest, Outputs};

/// Environment variable naming the default output root.
const OUT_ROOT_VAR: &str = "KACVORTEX_OUT_ROOT";

#[derive(Debug, Parser)]
#[command(name = "kacvortex", version, about = "Radial vortex profiles, energies, spectra and lattice runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; every key is optional
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory (default: $KACVORTEX_OUT_ROOT/<subcommand> or ./kacvortex-out/<subcommand>)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// overrides run.seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// overrides run.threads
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// spontaneous magnetization and entropy tables
    Meanfield,
    /// relax the hedgehog initial profile to an equilibrium
    Relax,
    /// renormalized energy and degree of a profile
    Energy,
    /// Hessian block spectra, zero modes and the commutator test
    Spectrum,
    /// whole-box versus confined dynamics
    Barrier,
    /// Metropolis run of the lattice rotor model
    Lattice,
    /// fast invariant battery; non-zero exit on any failure
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Meanfield => "meanfield",
            Self::Relax => "relax",
            Self::Energy => "energy",
            Self::Spectrum => "spectrum",
            Self::Barrier => "barrier",
            Self::Lattice => "lattice",
            Self::Verify => "verify",
        }
    }
}

/// Marker for a failed verification battery.
#[derive(Debug)]
struct VerifyFailed(Vec<&'static str>);

impl std::fmt::Display for VerifyFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0.join(", "))
    }
}

impl std::error::Error for VerifyFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<SchemaError>().is_some() {
        return 2;
    }
    if let Some(e) = err.downcast_ref::<kacvortex::Error>() {
        return if matches!(e, kacvortex::Error::Config(_)) { 2 } else { 3 };
    }
    if err.downcast_ref::<VerifyFailed>().is_some() {
        return 3;
    }
    1
}

fn out_dir(cli: &Cli) -> PathBuf {
    if let Some(p) = &cli.out {
        return p.clone();
    }
    let root = std::env::var_os(OUT_ROOT_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("kacvortex-out"));
    root.join(cli.command.name())
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.run.threads = t;
    }
    if cfg.run.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    let seed = cfg.run.seed;
    let dir = out_dir(cli);
    let mut out = Outputs::create(&dir)?;
    let start = Instant::now();
    let result = match cli.command {
        Command::Meanfield => pipelines::meanfield(&cfg, &mut out),
        Command::Relax => pipelines::relax(&cfg, &mut out),
        Command::Energy => pipelines::energy(&cfg, &mut out),
        Command::Spectrum => pipelines::spectrum(&cfg, &mut out, seed),
        Command::Barrier => pipelines::barrier(&cfg, &mut out),
        Command::Lattice => pipelines::lattice(&cfg, &mut out, seed),
        Command::Verify => verify::verify(&mut out).and_then(|(rows, ok)| {
            for r in &rows {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            if ok {
                Ok(serde_json::json!({"checks": rows.len(), "passed": true}))
            } else {
                Err(VerifyFailed(rows.iter().filter(|r| !r.passed).map(|r| r.name).collect()).into())
            }
        }),
    };
    let status = match &result {
        Ok(_) => "ok".to_string(),
        Err(e) => format!("failed: {e}"),
    };
    let manifest = Manifest {
        subcommand: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        threads: rayon::current_num_threads(),
        config_path: cli.config.as_ref().map(|p| p.display().to_string()),
        out_dir: out.dir().display().to_string(),
        config: &cfg,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        status: &status,
        files: out.files(),
    };
    out.finish(&manifest)?;
    let summary = result?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    println!("outputs written to {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
