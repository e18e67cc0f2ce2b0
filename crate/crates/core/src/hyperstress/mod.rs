//! Nonlocal second-gradient energy 𝓗, its derivative 𝕳 and the
//! Healey–Krömer lower bound on det ∇χ.

pub mod bound;
pub mod kernel;
pub mod nodal;
pub mod operator;

pub use bound::{estimate_bound_inputs, healey_kromer_eta, holder_constant, min_determinant_monitor, BoundInputs};
pub use kernel::{ramp, KernelSpec};
pub use nodal::{lagrange, NodalField, NodalSpace};
pub use operator::{gagliardo_energy, hyperstress_force, GagliardoOperator, PairQuadrature};
