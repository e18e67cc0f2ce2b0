//! Box meshes, tensor-product B-spline spaces, quadrature tables and the
//! Galerkin matrices built from them.

pub mod assembly;
pub mod bspline;
pub mod field;
pub mod mesh;
pub mod space;

pub use assembly::{assemble_mass_stiffness, boundary_form, boundary_form_by_name, BoundaryForms};
pub use field::{evaluate, Derivative, DiscreteField};
pub use mesh::{Facet, Mesh};
pub use space::{BoundaryTable, LocalEval, QuadTable, SplineSpace};
