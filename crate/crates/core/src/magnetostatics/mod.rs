//! Spatial-frame magnetostatics on a truncated box: push-forward of the
//! magnetization, the potential equation, Zeeman pull-back and the
//! Ciarlet–Nečas injectivity gap.

pub mod deposit;
pub mod grid;
pub mod mapping;
pub mod poisson;

pub use deposit::{cubic_bspline, deposit_moments, deposited_energy, DepositedEnergy};
pub use grid::{PotentialBoundary, SpatialGrid};
pub use mapping::{
    check_admissible, ciarlet_necas_gap, ciarlet_necas_gap_map, eval_map, eval_vector, image_bounds,
    pull_back_external_field, push_forward_magnetization, push_forward_with, reference_samples, referential_energy,
    spatial_zeeman, GapOptions, GapReport,
};
pub use poisson::{
    cell_gradient_integral, moment_integral, potential_gradient, solve_scalar_potential, PoissonOperator,
    PotentialSolution, CG_TOLERANCE,
};
