//! Lagrangian Galerkin solver for large-strain magneto-elastic solids with
//! diffusion and heat transfer.
//!
//! The physics modules work in two space dimensions; the spline
//! discretization and the nonlocal hyperstress operator also run in one.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constitutive;
pub mod discretization;
pub mod dynamics;
pub mod error;
pub mod galerkin;
pub mod hyperstress;
pub mod linalg;
pub mod loads;
pub mod magnetostatics;
pub mod scenario;
pub mod statics;

pub use error::{Error, Result};
