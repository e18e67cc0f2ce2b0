//! Constrained minimization of the static energy Ũ(χ, m, ζ, s).

pub mod energy;
pub mod minimize;

pub use energy::{
    ground_state, static_gradient, temperature_from_entropy, total_static_energy, StaticEnergyReport, StaticOptions,
    StaticProblem, StaticState,
};
pub use minimize::{minimize, StaticResult, TraceRow};
