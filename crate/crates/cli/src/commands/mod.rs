//! Subcommands: each validates its inputs in `prepare` (used alone by
//! `--validate-only`) and writes its artifacts in `execute`.

pub mod kernel;
pub mod magnet;
pub mod model;
pub mod simulate;
pub mod statics;

use thermomag::constitutive::MaterialModel;
use thermomag::dynamics::DynamicProblem;
use thermomag::hyperstress::KernelSpec;

use crate::artifacts::Artifacts;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    StaticMin,
    Simulate,
    Audit,
    KernelCheck,
    Magnetostatics,
    CheckModel,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::StaticMin => "static-min",
            Command::Simulate => "simulate",
            Command::Audit => "audit",
            Command::KernelCheck => "kernel-check",
            Command::Magnetostatics => "magnetostatics",
            Command::CheckModel => "check-model",
        }
    }
}

pub enum Prepared {
    Static(Box<statics::Prepared>),
    Dynamic(Box<DynamicProblem>),
    Kernel(KernelSpec),
    Magnet(Box<magnet::Prepared>),
    Model(Box<MaterialModel>),
}

pub fn prepare(cmd: Command, cfg: &RunConfig) -> Result<Prepared, CliError> {
    Ok(match cmd {
        Command::StaticMin => Prepared::Static(Box::new(statics::prepare(cfg)?)),
        Command::Simulate | Command::Audit => Prepared::Dynamic(Box::new(simulate::prepare(cfg)?)),
        Command::KernelCheck => Prepared::Kernel(kernel::prepare(cfg)?),
        Command::Magnetostatics => Prepared::Magnet(Box::new(magnet::prepare(cfg)?)),
        Command::CheckModel => Prepared::Model(Box::new(cfg.model()?)),
    })
}

pub fn execute(cmd: Command, cfg: &RunConfig, prep: &Prepared, out: &mut Artifacts) -> Result<(), CliError> {
    match (cmd, prep) {
        (Command::StaticMin, Prepared::Static(p)) => statics::execute(cfg, p, out),
        (Command::Simulate, Prepared::Dynamic(p)) => simulate::execute_simulate(cfg, p, out),
        (Command::Audit, Prepared::Dynamic(p)) => simulate::execute_audit(cfg, p, out),
        (Command::KernelCheck, Prepared::Kernel(k)) => kernel::execute(cfg, k, out),
        (Command::Magnetostatics, Prepared::Magnet(p)) => magnet::execute(cfg, p, out),
        (Command::CheckModel, Prepared::Model(m)) => model::execute(cfg, m, out),
        _ => unreachable!("prepared inputs match the command"),
    }
}
