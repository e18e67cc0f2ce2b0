//! Command-line driver: reads a run configuration, runs one subcommand and
//! writes its artifacts with a hash manifest.
//!
//! Exit status: 0 on success, 2 for invalid input or a failed check,
//! 3 for solver or i/o failures.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use artifacts::Artifacts;
use commands::Command;
use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "thermomag", version, about = "Thermo-magneto-chemo-mechanical Galerkin solver")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Minimize the static energy under the mass and entropy constraints.
    StaticMin(RunArgs),
    /// Integrate the dynamic problem and write per-step data and snapshots.
    Simulate(RunArgs),
    /// Integrate the dynamic problem and write the full energy audit.
    Audit(RunArgs),
    /// Check the nonlocal kernel and compare its energy with a reference quadrature.
    KernelCheck(RunArgs),
    /// Stray-field energy and injectivity gap of a deformed magnetized body.
    Magnetostatics(RunArgs),
    /// Check the structural assumptions of the material model.
    CheckModel(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Run configuration (TOML).
    config: PathBuf,
    /// Parse and validate the configuration without running.
    #[arg(long)]
    validate_only: bool,
    /// Worker threads; overrides the `threads` key.
    #[arg(long)]
    threads: Option<usize>,
}

impl Sub {
    fn split(self) -> (Command, RunArgs) {
        match self {
            Sub::StaticMin(a) => (Command::StaticMin, a),
            Sub::Simulate(a) => (Command::Simulate, a),
            Sub::Audit(a) => (Command::Audit, a),
            Sub::KernelCheck(a) => (Command::KernelCheck, a),
            Sub::Magnetostatics(a) => (Command::Magnetostatics, a),
            Sub::CheckModel(a) => (Command::CheckModel, a),
        }
    }
}

fn fail(cmd: Command, e: &CliError) -> i32 {
    let record = e.record(cmd.name());
    eprintln!("{}", serde_json::to_string(&record).expect("error record serializes"));
    record.exit_code
}

fn load(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&args.config)?.resolve();
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cmd: Command, args: &RunArgs, cfg: &RunConfig, threads: usize) -> i32 {
    let prep = match commands::prepare(cmd, cfg) {
        Ok(p) => p,
        Err(e) => return fail(cmd, &e),
    };
    if args.validate_only {
        println!("{}", json!({ "status": "valid", "command": cmd.name(), "config": cfg }));
        return 0;
    }
    let mut out = match Artifacts::create(&PathBuf::from(&cfg.output_dir)) {
        Ok(o) => o,
        Err(e) => return fail(cmd, &e),
    };
    let result = cfg
        .to_text()
        .and_then(|text| out.write("config.resolved.cfg", text.as_bytes()))
        .and_then(|()| commands::execute(cmd, cfg, &prep, &mut out));
    if let Err(e) = &result {
        // best effort: the manifest below still lists whatever was written
        let _ = out.write_json("error.json", &e.record(cmd.name()));
    }
    let root = out.root().display().to_string();
    match (result, out.finish(cmd.name(), cfg, threads)) {
        (Ok(()), Ok(records)) => {
            println!(
                "{}",
                json!({ "status": "ok", "command": cmd.name(), "output_dir": root, "artifacts": records.len() })
            );
            0
        }
        (Err(e), _) | (Ok(()), Err(e)) => fail(cmd, &e),
    }
}

fn main() {
    let (cmd, args) = Cli::parse().command.split();
    let code = match load(&args) {
        Err(e) => fail(cmd, &e),
        Ok(cfg) => {
            let threads = match cfg.threads {
                0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
                n => n,
            };
            match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => pool.install(|| execute(cmd, &args, &cfg, threads)),
                Err(e) => fail(cmd, &CliError::Io(std::io::Error::other(e))),
            }
        }
    };
    std::process::exit(code);
}
