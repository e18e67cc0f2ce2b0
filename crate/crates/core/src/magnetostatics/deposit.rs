//! Smooth deposition of point moments onto grid cells, used where the
//! magnetostatic energy must be differentiable in the deformation.

use super::grid::SpatialGrid;
use super::poisson::{cell_gradient_integral, PoissonOperator, PotentialSolution};
use crate::error::{Error, Result};

/// Centred cubic B-spline on [−2, 2] and its derivative.
pub fn cubic_bspline(t: f64) -> (f64, f64) {
    let a = t.abs();
    let s = t.signum();
    if a >= 2.0 {
        (0.0, 0.0)
    } else if a >= 1.0 {
        let u = 2.0 - a;
        (u * u * u / 6.0, -s * 0.5 * u * u)
    } else {
        (2.0 / 3.0 - a * a + 0.5 * a * a * a, s * (-2.0 * a + 1.5 * a * a))
    }
}

/// Cells touched by a moment at z with their weights (per unit area) and
/// weight gradients.
fn stencil(grid: &SpatialGrid, z: [f64; 2]) -> Result<Vec<(usize, f64, [f64; 2])>> {
    let h = grid.h();
    let u = [(z[0] - grid.lo[0]) / h[0] - 0.5, (z[1] - grid.lo[1]) / h[1] - 0.5];
    let base = [u[0].floor() as i64, u[1].floor() as i64];
    if !(u[0].is_finite() && u[1].is_finite())
        || base[0] - 1 < 0
        || base[1] - 1 < 0
        || base[0] + 2 >= grid.cells[0] as i64
        || base[1] + 2 >= grid.cells[1] as i64
    {
        return Err(Error::InvalidInput(format!("moment at ({:.4}, {:.4}) leaves the spatial grid", z[0], z[1])));
    }
    let area = h[0] * h[1];
    let mut out = Vec::with_capacity(16);
    for dj in -1..=2 {
        let j = base[1] + dj;
        let (by, dby) = cubic_bspline(u[1] - j as f64);
        for di in -1..=2 {
            let i = base[0] + di;
            let (bx, dbx) = cubic_bspline(u[0] - i as f64);
            out.push((
                grid.cell_index(i as usize, j as usize),
                bx * by / area,
                [dbx * by / (h[0] * area), bx * dby / (h[1] * area)],
            ));
        }
    }
    Ok(out)
}

/// 𝗆̄ = Σ_q μ_q W(· − z_q); the total moment is preserved exactly.
pub fn deposit_moments(grid: &SpatialGrid, positions: &[[f64; 2]], moments: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let mut m = vec![[0.0; 2]; grid.n_cells()];
    for (z, mu) in positions.iter().zip(moments) {
        for (c, w, _) in stencil(grid, *z)? {
            m[c][0] += w * mu[0];
            m[c][1] += w * mu[1];
        }
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct DepositedEnergy {
    pub energy: f64,
    pub d_position: Vec<[f64; 2]>,
    pub d_moment: Vec<[f64; 2]>,
    pub m_bar: Vec<[f64; 2]>,
    pub solution: PotentialSolution,
}

/// Magnetostatic energy of deposited moments and its derivatives with
/// respect to the moment positions and values.
pub fn deposited_energy(
    op: &PoissonOperator,
    positions: &[[f64; 2]],
    moments: &[[f64; 2]],
    warm: Option<&[f64]>,
) -> Result<DepositedEnergy> {
    let grid = &op.grid;
    let m_bar = deposit_moments(grid, positions, moments)?;
    let solution = op.solve(&m_bar, warm)?;
    // ∂E/∂𝗆̄_c = −∫_c ∇φ
    let gc: Vec<[f64; 2]> = (0..grid.n_cells())
        .map(|c| {
            let g = cell_gradient_integral(grid, &solution.phi, c);
            [-g[0], -g[1]]
        })
        .collect();
    let mut d_position = Vec::with_capacity(positions.len());
    let mut d_moment = Vec::with_capacity(positions.len());
    for (z, mu) in positions.iter().zip(moments) {
        let mut dp = [0.0; 2];
        let mut dm = [0.0; 2];
        for (c, w, dw) in stencil(grid, *z)? {
            let g = gc[c];
            dm[0] += w * g[0];
            dm[1] += w * g[1];
            let gm = g[0] * mu[0] + g[1] * mu[1];
            dp[0] += dw[0] * gm;
            dp[1] += dw[1] * gm;
        }
        d_position.push(dp);
        d_moment.push(dm);
    }
    Ok(DepositedEnergy { energy: solution.energy_moment, d_position, d_moment, m_bar, solution })
}
