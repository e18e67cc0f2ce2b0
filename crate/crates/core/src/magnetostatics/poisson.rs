use serde::Serialize;

use super::grid::{PotentialBoundary, SpatialGrid};
use crate::error::{Error, Result};
use crate::linalg::{pcg, Csr};

pub const CG_TOLERANCE: f64 = 1e-10;

/// Q1 discretization of −div(μ₀∇φ) = div 𝗆̄ with piecewise constant 𝗆̄.
#[derive(Debug, Clone)]
pub struct PoissonOperator {
    pub grid: SpatialGrid,
    matrix: Csr,
    diag: Vec<f64>,
    fixed: Vec<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialSolution {
    pub phi: Vec<f64>,
    /// ½ φᵀLφ: (μ₀/2)∫|∇φ|² plus the exterior (Robin) part.
    pub energy: f64,
    /// −½ ∫ ∇φ·𝗆̄.
    pub energy_moment: f64,
    pub iterations: usize,
    pub rel_residual: f64,
}

const M1: [[f64; 2]; 2] = [[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]];
const S1: [[f64; 2]; 2] = [[1.0, -1.0], [-1.0, 1.0]];

impl PoissonOperator {
    pub fn new(grid: &SpatialGrid) -> PoissonOperator {
        let h = grid.h();
        let mu = grid.mu0;
        let n = grid.n_nodes();
        let mut ke = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let (ax, ay, bx, by) = (a % 2, a / 2, b % 2, b / 2);
                ke[a][b] = mu * (S1[ax][bx] / h[0] * h[1] * M1[ay][by] + h[0] * M1[ax][bx] * S1[ay][by] / h[1]);
            }
        }
        let mut trip = Vec::with_capacity(16 * grid.n_cells() + 8 * (grid.cells[0] + grid.cells[1]));
        for j in 0..grid.cells[1] {
            for i in 0..grid.cells[0] {
                let nodes = cell_nodes(grid, i, j);
                for a in 0..4 {
                    for b in 0..4 {
                        trip.push((nodes[a], nodes[b], ke[a][b]));
                    }
                }
            }
        }
        let mut fixed = vec![false; n];
        let (nx, ny) = (grid.cells[0], grid.cells[1]);
        let mut edges = vec![];
        for i in 0..nx {
            edges.push((grid.node_index(i, 0), grid.node_index(i + 1, 0), [0.0, -1.0], h[0]));
            edges.push((grid.node_index(i, ny), grid.node_index(i + 1, ny), [0.0, 1.0], h[0]));
        }
        for j in 0..ny {
            edges.push((grid.node_index(0, j), grid.node_index(0, j + 1), [-1.0, 0.0], h[1]));
            edges.push((grid.node_index(nx, j), grid.node_index(nx, j + 1), [1.0, 0.0], h[1]));
        }
        match grid.boundary {
            PotentialBoundary::Robin => {
                let c = grid.center();
                let g = 0.5 / 3f64.sqrt();
                for (p, q, nrm, len) in edges {
                    let (zp, zq) = (grid.node(p), grid.node(q));
                    // two-point Gauss on the edge
                    for t in [0.5 - g, 0.5 + g] {
                        let z = [zp[0] + t * (zq[0] - zp[0]), zp[1] + t * (zq[1] - zp[1])];
                        let d = [z[0] - c[0], z[1] - c[1]];
                        let beta = (nrm[0] * d[0] + nrm[1] * d[1]) / (d[0] * d[0] + d[1] * d[1]);
                        let w = 0.5 * len * mu * beta;
                        let v = [1.0 - t, t];
                        let ids = [p, q];
                        for a in 0..2 {
                            for b in 0..2 {
                                trip.push((ids[a], ids[b], w * v[a] * v[b]));
                            }
                        }
                    }
                }
            }
            PotentialBoundary::ZeroDirichlet => {
                for (p, q, _, _) in edges {
                    fixed[p] = true;
                    fixed[q] = true;
                }
            }
        }
        if fixed.iter().any(|f| *f) {
            trip.retain(|(r, c, _)| !fixed[*r] && !fixed[*c]);
            for (k, f) in fixed.iter().enumerate() {
                if *f {
                    trip.push((k, k, 1.0));
                }
            }
        }
        let matrix = Csr::from_triplets(n, n, &trip);
        let diag = matrix.diagonal();
        PoissonOperator { grid: grid.clone(), matrix, diag, fixed }
    }

    pub fn matrix(&self) -> &Csr {
        &self.matrix
    }

    /// Load vector b = −∫ 𝗆̄·∇ψ for cell magnetization `m_bar`.
    pub fn load(&self, m_bar: &[[f64; 2]]) -> Vec<f64> {
        let g = &self.grid;
        let h = g.h();
        let mut b = vec![0.0; g.n_nodes()];
        for j in 0..g.cells[1] {
            for i in 0..g.cells[0] {
                let m = m_bar[g.cell_index(i, j)];
                if m == [0.0, 0.0] {
                    continue;
                }
                let nodes = cell_nodes(g, i, j);
                for (a, &k) in nodes.iter().enumerate() {
                    let sx = if a % 2 == 1 { 1.0 } else { -1.0 };
                    let sy = if a / 2 == 1 { 1.0 } else { -1.0 };
                    b[k] -= m[0] * sx * 0.5 * h[1] + m[1] * sy * 0.5 * h[0];
                }
            }
        }
        for (k, f) in self.fixed.iter().enumerate() {
            if *f {
                b[k] = 0.0;
            }
        }
        b
    }

    /// Solves for φ by Jacobi-preconditioned CG, optionally warm-started.
    pub fn solve(&self, m_bar: &[[f64; 2]], warm: Option<&[f64]>) -> Result<PotentialSolution> {
        let g = &self.grid;
        if m_bar.len() != g.n_cells() {
            return Err(Error::InvalidInput(format!(
                "magnetization has {} cells, grid has {}",
                m_bar.len(),
                g.n_cells()
            )));
        }
        let b = self.load(m_bar);
        let mut phi = match warm {
            Some(w) if w.len() == b.len() => w.to_vec(),
            _ => vec![0.0; b.len()],
        };
        let info = pcg(|x, y| self.matrix.matvec(x, y), &self.diag, &b, &mut phi, CG_TOLERANCE, 20 * b.len())?;
        let lphi = self.matrix.mul_vec(&phi);
        let energy = 0.5 * crate::linalg::dot(&phi, &lphi);
        let energy_moment = -0.5 * moment_integral(g, &phi, m_bar);
        Ok(PotentialSolution {
            phi,
            energy,
            energy_moment,
            iterations: info.iterations,
            rel_residual: info.rel_residual,
        })
    }
}

pub(crate) fn cell_nodes(g: &SpatialGrid, i: usize, j: usize) -> [usize; 4] {
    [g.node_index(i, j), g.node_index(i + 1, j), g.node_index(i, j + 1), g.node_index(i + 1, j + 1)]
}

/// ∫_cell ∇φ for a Q1 nodal potential.
pub fn cell_gradient_integral(g: &SpatialGrid, phi: &[f64], c: usize) -> [f64; 2] {
    let h = g.h();
    let (i, j) = (c % g.cells[0], c / g.cells[0]);
    let n = cell_nodes(g, i, j);
    let (p00, p10, p01, p11) = (phi[n[0]], phi[n[1]], phi[n[2]], phi[n[3]]);
    [0.5 * h[1] * (p10 - p00 + p11 - p01), 0.5 * h[0] * (p01 - p00 + p11 - p10)]
}

/// ∫ ∇φ·𝗆̄ over the grid.
pub fn moment_integral(g: &SpatialGrid, phi: &[f64], m_bar: &[[f64; 2]]) -> f64 {
    let terms: Vec<f64> = (0..g.n_cells())
        .map(|c| {
            let m = m_bar[c];
            if m == [0.0, 0.0] {
                return 0.0;
            }
            let gi = cell_gradient_integral(g, phi, c);
            gi[0] * m[0] + gi[1] * m[1]
        })
        .collect();
    crate::linalg::pairwise_sum(&terms)
}

/// ∇φ at a point of the box (bilinear interpolation derivative).
pub fn potential_gradient(g: &SpatialGrid, phi: &[f64], z: [f64; 2]) -> Option<[f64; 2]> {
    let [i, j] = g.cell_of(z)?;
    let h = g.h();
    let n = cell_nodes(g, i, j);
    let u = (z[0] - g.lo[0]) / h[0] - i as f64;
    let v = (z[1] - g.lo[1]) / h[1] - j as f64;
    let (p00, p10, p01, p11) = (phi[n[0]], phi[n[1]], phi[n[2]], phi[n[3]]);
    Some([((p10 - p00) * (1.0 - v) + (p11 - p01) * v) / h[0], ((p01 - p00) * (1.0 - u) + (p11 - p10) * u) / h[1]])
}

/// One-shot solve on a fresh operator.
pub fn solve_scalar_potential(m_bar: &[[f64; 2]], grid: &SpatialGrid) -> Result<PotentialSolution> {
    PoissonOperator::new(grid).solve(m_bar, None)
}
