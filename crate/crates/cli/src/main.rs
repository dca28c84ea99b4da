mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::commands::{Failure, Run};
use crate::config::Config;
use crate::manifest::{manifest_path_for, RunManifest};

#[derive(Parser, Debug)]
#[command(
    name = "stump",
    version,
    about = "CSG-Stump normalization, fitting, refinement and evaluation"
)]
pub struct Cli {
    /// TOML file with defaults for seeds, sampling, annealing and optimizer settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for data-parallel evaluation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, short, global = true)]
    pub quiet: bool,
    /// Manifest path (default: next to the main output as `<stem>.manifest.json`).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert a `.csg` tree into a stump JSON file.
    Normalize(commands::NormalizeArgs),
    /// Solve for binary connection matrices on fixed primitives.
    Fit(commands::FitArgs),
    /// Jointly optimize primitives and relaxed weights by gradient descent.
    Refine(commands::RefineArgs),
    /// Compute metrics and export grids, meshes and OpenSCAD.
    Eval(commands::EvalArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Normalize(_) => "normalize",
            Command::Fit(_) => "fit",
            Command::Refine(_) => "refine",
            Command::Eval(_) => "eval",
        }
    }

    fn primary_output(&self) -> PathBuf {
        match self {
            Command::Normalize(a) => a.output.clone(),
            Command::Fit(a) => a.output.clone(),
            Command::Refine(a) => a.output.clone(),
            Command::Eval(a) => a.output.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut run = Run::default();
    let result = execute(&cli, &mut run);
    let (code, error) = match &result {
        Ok(()) => (0, None),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            (f.code, Some(format!("{:#}", f.err)))
        }
    };
    let manifest = RunManifest {
        subcommand: cli.command.name().to_string(),
        tool_version: env!("CARGO_PKG_VERSION"),
        args: std::env::args().collect(),
        config: run.config.take().unwrap_or(serde_json::Value::Null),
        seed: run.seed,
        threads: run.threads,
        inputs: run.inputs,
        outputs: run.outputs,
        wall_time_secs: start.elapsed().as_secs_f64(),
        exit_code: code,
        error,
    };
    let path = cli
        .manifest
        .clone()
        .unwrap_or_else(|| manifest_path_for(&cli.command.primary_output()));
    let written = serde_json::to_string_pretty(&manifest)
        .map_err(std::io::Error::other)
        .and_then(|text| std::fs::write(&path, text + "\n"));
    if let Err(e) = written {
        eprintln!("error: writing manifest {}: {e}", path.display());
        return ExitCode::from(if code == 0 { 1 } else { code });
    }
    ExitCode::from(code)
}

fn execute(cli: &Cli, run: &mut Run) -> Result<(), Failure> {
    let mut cfg = Config::load(cli.config.as_deref()).map_err(Failure::parse)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(path) = &cli.config {
        run.inputs.push(path.clone());
    }
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::other(anyhow::anyhow!("thread pool: {e}")))?;
    }
    run.seed = cfg.seed;
    run.threads = cfg.threads;
    run.quiet = cli.quiet;
    match &cli.command {
        Command::Normalize(a) => commands::normalize(a, &cfg, run),
        Command::Fit(a) => commands::fit(a, &mut cfg, run),
        Command::Refine(a) => commands::refine(a, &mut cfg, run),
        Command::Eval(a) => commands::eval(a, &mut cfg, run),
    }
}
