use std::sync::Arc;

use serde::Serialize;
use thermomag::discretization::{DiscreteField, Mesh, SplineSpace};
use thermomag::magnetostatics::{
    ciarlet_necas_gap, image_bounds, potential_gradient, push_forward_with, referential_energy, solve_scalar_potential,
    GapOptions, GapReport, SpatialGrid,
};

use crate::artifacts::Artifacts;
use crate::config::RunConfig;
use crate::error::CliError;

pub struct Prepared {
    chi: DiscreteField,
    m: DiscreteField,
    grid: SpatialGrid,
    gap: GapOptions,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let c = &cfg.magnetostatics;
    let f = c.deformation;
    let det = f[0][0] * f[1][1] - f[0][1] * f[1][0];
    if !(det > 0.0) {
        return Err(CliError::Config(format!("magnetostatics.deformation must have positive determinant, got {det}")));
    }
    let space = Arc::new(SplineSpace::new(Mesh::unit_square(cfg.mesh.cells), cfg.mesh.degree)?);
    let chi = DiscreteField::project(space.clone(), 2, |x| {
        vec![f[0][0] * x[0] + f[0][1] * x[1] + c.translation[0], f[1][0] * x[0] + f[1][1] * x[1] + c.translation[1]]
    })?;
    let m = DiscreteField::project(space, 2, |_| c.magnetization.to_vec())?;
    let (lo, hi) = image_bounds(&chi)?;
    let grid = SpatialGrid::around(lo, hi, c.margin, c.grid_cells, c.mu0, c.boundary)?;
    let gap = GapOptions { samples: c.gap_samples, seed: cfg.seed, ..GapOptions::default() };
    Ok(Prepared { chi, m, grid, gap })
}

#[derive(Serialize)]
struct Report<'a> {
    /// (μ₀/2)∫|∇φ|² including the exterior part of the truncation.
    energy: f64,
    /// −½∫∇φ·𝗆̄ over the grid.
    energy_moment: f64,
    /// −½∫(Fᵀ∇φ∘χ)·m over the reference body.
    energy_referential: f64,
    cg_iterations: usize,
    cg_rel_residual: f64,
    gap: &'a GapReport,
    grid: &'a SpatialGrid,
}

const SLICE_COLUMNS: [&str; 4] = ["z_x", "z_y", "h_x", "h_y"];

pub fn execute(cfg: &RunConfig, p: &Prepared, out: &mut Artifacts) -> Result<(), CliError> {
    let gap = ciarlet_necas_gap(&p.chi, &p.gap);
    let m_bar = push_forward_with(&p.chi, &p.m, &p.grid, &p.gap)?;
    let sol = solve_scalar_potential(&m_bar, &p.grid)?;
    let energy_referential = referential_energy(&p.chi, &p.m, &sol, &p.grid)?;
    out.write_json(
        "magnetostatics.json",
        &Report {
            energy: sol.energy,
            energy_moment: sol.energy_moment,
            energy_referential,
            cg_iterations: sol.iterations,
            cg_rel_residual: sol.rel_residual,
            gap: &gap,
            grid: &p.grid,
        },
    )?;
    let n = cfg.magnetostatics.slice_points.max(2);
    let y = p.grid.center()[1];
    let (x0, x1) = (p.grid.lo[0], p.grid.hi[0]);
    let rows: Vec<Vec<f64>> = (0..n)
        .filter_map(|k| {
            // stay strictly inside the box so every point has a cell
            let x = x0 + (x1 - x0) * (k as f64 + 0.5) / n as f64;
            potential_gradient(&p.grid, &sol.phi, [x, y]).map(|g| vec![x, y, -g[0], -g[1]])
        })
        .collect();
    out.write_csv("demag_slice.csv", &SLICE_COLUMNS, &rows)
}
