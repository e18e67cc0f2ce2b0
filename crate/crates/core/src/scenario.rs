//! Bundled scenarios on the unit square with the bundled material.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constitutive::{bundled_model, thermal_closure, MaterialModel, Vec2};
use crate::discretization::{Facet, Mesh};
use crate::dynamics::{DynamicOptions, DynamicProblem, InitialData};
use crate::error::Result;
use crate::galerkin::Galerkin;
use crate::hyperstress::{GagliardoOperator, KernelSpec, PairQuadrature};
use crate::loads::{LoadSet, ScalarLoad, SpaceProfile, TimeProfile, VectorLoad};
use crate::magnetostatics::{PotentialBoundary, SpatialGrid};
use crate::statics::{StaticOptions, StaticProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicScenario {
    /// Undeformed, unmagnetized body at θ = θ_e = 1 with zero loads.
    GroundState,
    /// Oscillating nonuniform field, boundary traction, body force and
    /// exchange with a warmer environment.
    Driven,
    /// Smooth initial data with a slowly ramped field.
    Smooth,
    /// Warm body losing heat to an environment at θ_e = 0.
    Cooling,
}

impl DynamicScenario {
    pub fn all() -> [DynamicScenario; 4] {
        [DynamicScenario::GroundState, DynamicScenario::Driven, DynamicScenario::Smooth, DynamicScenario::Cooling]
    }

    pub fn loads(self) -> LoadSet {
        let base = LoadSet { heat_transfer: 1.0, temperature: ScalarLoad::constant(1.0), ..LoadSet::default() };
        match self {
            DynamicScenario::GroundState => base,
            DynamicScenario::Driven => LoadSet {
                field: VectorLoad {
                    amplitude: [0.4, 0.2],
                    time: TimeProfile::Sinusoid { period: 1.0, phase: 0.0 },
                    space: SpaceProfile::GaussianBump { center: [0.5, 0.5], width: 0.6 },
                },
                body_force: VectorLoad {
                    amplitude: [0.0, -0.05],
                    time: TimeProfile::Ramp { duration: 0.5 },
                    space: SpaceProfile::Uniform,
                },
                traction: VectorLoad {
                    amplitude: [0.05, 0.0],
                    time: TimeProfile::Sinusoid { period: 0.5, phase: 0.0 },
                    space: SpaceProfile::Uniform,
                },
                traction_facets: vec![Facet::Right],
                chemical_potential: ScalarLoad::constant(0.02),
                mass_transfer: 0.5,
                temperature: ScalarLoad::constant(1.2),
                ..base
            },
            DynamicScenario::Smooth => LoadSet {
                field: VectorLoad {
                    amplitude: [0.3, 0.1],
                    time: TimeProfile::Ramp { duration: 0.5 },
                    space: SpaceProfile::Uniform,
                },
                mass_transfer: 0.5,
                temperature: ScalarLoad::constant(1.1),
                ..base
            },
            DynamicScenario::Cooling => LoadSet { temperature: ScalarLoad::constant(0.0), ..base },
        }
    }

    pub fn initial(self, g: &Galerkin) -> Result<InitialData> {
        use std::f64::consts::PI;
        let zr = g.model.zeta_ref;
        let id = |x: [f64; 2]| x;
        let zero = |_: [f64; 2]| [0.0, 0.0];
        match self {
            DynamicScenario::GroundState | DynamicScenario::Cooling => {
                InitialData::from_functions(g, &id, &zero, &zero, &|_| zr, &|_| 1.0)
            }
            DynamicScenario::Driven => InitialData::from_functions(
                g,
                &id,
                &|x| [0.05 * (PI * x[1]).sin(), 0.0],
                &|x| [0.2 + 0.1 * (PI * x[1]).cos(), 0.1 * (PI * x[0]).sin()],
                &|x| zr + 0.05 * (PI * x[0]).cos() * (PI * x[1]).cos(),
                &|x| 1.0 + 0.1 * x[0],
            ),
            DynamicScenario::Smooth => InitialData::from_functions(
                g,
                &id,
                &zero,
                &|x| [0.1 * (PI * x[0]).cos(), 0.1 * (PI * x[1]).cos()],
                &|x| zr + 0.05 * (PI * x[0]).cos(),
                &|x| 1.0 + 0.2 * (PI * x[0]).sin() * (PI * x[1]).sin(),
            ),
        }
    }
}

/// Discretization and time grid of a dynamic run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSpec {
    pub cells: usize,
    pub degree: usize,
    pub t_end: f64,
    pub dt: f64,
    pub eps: f64,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec { cells: 8, degree: 3, t_end: 1.0, dt: 1.0 / 64.0, eps: 1e-3 }
    }
}

/// Gagliardo operator for the unit square; reusable across runs that share
/// the mesh, degree and kernel.
pub fn unit_square_operator(cells: usize, degree: usize, kernel: &KernelSpec) -> Result<Arc<GagliardoOperator>> {
    let mesh = Mesh::unit_square(cells);
    Ok(Arc::new(GagliardoOperator::new(&mesh, degree, kernel, &PairQuadrature::default())?))
}

pub fn dynamic_problem(
    scenario: DynamicScenario,
    model: MaterialModel,
    kernel: &KernelSpec,
    run: &RunSpec,
    operator: Option<Arc<GagliardoOperator>>,
) -> Result<DynamicProblem> {
    let mesh = Mesh::unit_square(run.cells);
    let op = match operator {
        Some(op) => op,
        None => unit_square_operator(run.cells, run.degree, kernel)?,
    };
    let g = Galerkin::with_operator(model, &mesh, run.degree, kernel, op, scenario.loads())?;
    let init = scenario.initial(&g)?;
    DynamicProblem::new(g, run.eps, run.t_end, run.dt, init, DynamicOptions::default())
}

/// Bundled dynamic scenario with the bundled material and kernel.
pub fn bundled_dynamic(
    scenario: DynamicScenario,
    run: &RunSpec,
    operator: Option<Arc<GagliardoOperator>>,
) -> Result<DynamicProblem> {
    dynamic_problem(scenario, bundled_model(), &KernelSpec::default(), run, operator)
}

/// Static problem with a uniform field along the easy axis, clamped on the
/// left facet, at the ground-state amounts of ζ and entropy.
pub fn aligned_field_static(cells: usize, field: [f64; 2], options: StaticOptions) -> Result<StaticProblem> {
    let mesh = Mesh::unit_square(cells);
    let loads = LoadSet { field: VectorLoad::constant(field), ..LoadSet::default() };
    let g = Galerkin::new(bundled_model(), &mesh, 3, &KernelSpec::default(), loads)?;
    let grid = SpatialGrid::around(mesh.lo, mesh.hi, 2.0, 48, 1.0, PotentialBoundary::Robin)?;
    let z_tot = g.model.zeta_ref * mesh.measure();
    let s_tot = thermal_closure(&g.model, &Vec2::zeros(), g.model.zeta_ref, 1.0).s * mesh.measure();
    StaticProblem::new(g, vec![Facet::Left], z_tot, s_tot, grid, options)
}
