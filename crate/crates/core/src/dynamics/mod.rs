//! Staggered time integration: implicit midpoint for momentum, implicit
//! Euler for magnetization, diffusion and heat.

pub mod audit;
pub mod problem;
pub mod residuals;
pub mod step;

pub use audit::*;
pub use problem::*;
pub use residuals::{
    regularized_heat_source, residual_magnetization, residual_momentum, solve_chemical_potential, HeatRates, HeatSource,
};
pub use step::*;
