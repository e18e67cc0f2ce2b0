use nalgebra::DMatrix;

use crate::discretization::{Mesh, SplineSpace};
use crate::error::{Error, Result};
use crate::linalg::{gauss_on, Csr};

/// Physical point, weight, cell index and reference point.
pub type GaussPoint = ([f64; 2], f64, [usize; 2], [f64; 2]);

/// Continuous piecewise Q_r Lagrange space with equispaced nodes. Fields
/// handed to the nonlocal operator are sampled at these nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalSpace {
    pub mesh: Mesh,
    pub order: usize,
    /// Per-axis order; 0 on the inactive axis of a 1-D mesh.
    r: [usize; 2],
    n: [usize; 2],
}

/// Lagrange basis on [0, 1] with nodes i/r, evaluated at t.
pub fn lagrange(r: usize, t: f64) -> Vec<f64> {
    if r == 0 {
        return vec![1.0];
    }
    let nodes: Vec<f64> = (0..=r).map(|i| i as f64 / r as f64).collect();
    (0..=r)
        .map(|i| {
            let mut v = 1.0;
            for j in 0..=r {
                if j != i {
                    v *= (t - nodes[j]) / (nodes[i] - nodes[j]);
                }
            }
            v
        })
        .collect()
}

impl NodalSpace {
    pub fn new(mesh: Mesh, order: usize) -> Result<NodalSpace> {
        if order < 1 {
            return Err(Error::InvalidInput("nodal order must be at least 1".into()));
        }
        let r = [order, if mesh.dim == 2 { order } else { 0 }];
        let n = [r[0] * mesh.cells[0] + 1, if mesh.dim == 2 { r[1] * mesh.cells[1] + 1 } else { 1 }];
        Ok(NodalSpace { mesh, order, r, n })
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis_order(&self, axis: usize) -> usize {
        self.r[axis]
    }

    /// Number of cells along each axis (1 on the inactive axis).
    pub fn cells(&self) -> [usize; 2] {
        [self.mesh.cells[0], if self.mesh.dim == 2 { self.mesh.cells[1] } else { 1 }]
    }

    pub fn cell_size(&self) -> [f64; 2] {
        [self.mesh.h(0), if self.mesh.dim == 2 { self.mesh.h(1) } else { 1.0 }]
    }

    /// Global index of lattice node (i, j).
    pub fn lattice(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    pub fn global(&self, cell: [usize; 2], local: [usize; 2]) -> usize {
        self.lattice(cell[0] * self.r[0] + local[0], cell[1] * self.r[1] + local[1])
    }

    pub fn n_local(&self) -> usize {
        (self.r[0] + 1) * (self.r[1] + 1)
    }

    /// Local lattice offsets of the nodes of one cell, x fastest.
    pub fn local_nodes(&self) -> Vec<[usize; 2]> {
        let mut out = vec![];
        for j in 0..=self.r[1] {
            for i in 0..=self.r[0] {
                out.push([i, j]);
            }
        }
        out
    }

    /// Values of the local basis at reference point u ∈ [0,1]^d.
    pub fn local_values(&self, u: [f64; 2]) -> Vec<f64> {
        let lx = lagrange(self.r[0], u[0]);
        let ly = lagrange(self.r[1], u[1]);
        let mut out = Vec::with_capacity(self.n_local());
        for vy in &ly {
            for vx in &lx {
                out.push(vx * vy);
            }
        }
        out
    }

    pub fn node(&self, k: usize) -> [f64; 2] {
        let (i, j) = (k % self.n[0], k / self.n[0]);
        let h = self.cell_size();
        let x = self.mesh.lo[0] + i as f64 * h[0] / self.r[0] as f64;
        let y = if self.mesh.dim == 2 { self.mesh.lo[1] + j as f64 * h[1] / self.r[1] as f64 } else { 0.0 };
        [x, y]
    }

    pub fn nodes(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Samples `f` (with `ncomp` components) at the nodes.
    pub fn interpolate<F: Fn([f64; 2]) -> Vec<f64>>(&self, ncomp: usize, f: F) -> NodalField {
        let n = self.len();
        let mut values = vec![0.0; n * ncomp];
        for k in 0..n {
            let v = f(self.node(k));
            for c in 0..ncomp {
                values[c * n + k] = v[c];
            }
        }
        NodalField { ncomp, values }
    }

    /// Tensor Gauss points with `q` per axis and cell, as
    /// (physical point, weight, cell, reference point).
    pub fn gauss_points(&self, q: usize) -> Vec<GaussPoint> {
        let h = self.cell_size();
        let cells = self.cells();
        let (ux, wx) = gauss_on(q, 0.0, 1.0);
        let (uy, wy) = if self.mesh.dim == 2 { (ux.clone(), wx.clone()) } else { (vec![0.0], vec![1.0]) };
        let mut out = vec![];
        for cy in 0..cells[1] {
            for cx in 0..cells[0] {
                for (a, wa) in uy.iter().zip(&wy) {
                    for (b, wb) in ux.iter().zip(&wx) {
                        let x = self.mesh.lo[0] + (cx as f64 + b) * h[0];
                        let y = if self.mesh.dim == 2 { self.mesh.lo[1] + (cy as f64 + a) * h[1] } else { 0.0 };
                        out.push(([x, y], wa * wb * h[0] * h[1], [cx, cy], [*b, *a]));
                    }
                }
            }
        }
        out
    }

    /// Nodal mass matrix (exact with r + 1 Gauss points).
    pub fn mass(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        let loc = self.local_nodes();
        for (_, w, cell, u) in self.gauss_points(self.order + 1) {
            let v = self.local_values(u);
            for (a, la) in loc.iter().enumerate() {
                let ga = self.global(cell, *la);
                for (b, lb) in loc.iter().enumerate() {
                    m[(ga, self.global(cell, *lb))] += w * v[a] * v[b];
                }
            }
        }
        m
    }

    /// Sparse sampling operators from spline coefficients to nodal values
    /// of the second derivatives (xx, xy, yy).
    pub fn hessian_sampler(&self, space: &SplineSpace) -> Result<[Csr; 3]> {
        if space.mesh.lo != self.mesh.lo || space.mesh.hi != self.mesh.hi || space.dim() != self.dim() {
            return Err(Error::InvalidInput("spline and nodal spaces cover different domains".into()));
        }
        if space.degree < 2 {
            return Err(Error::UnsupportedOrder { order: 2, needed: 3, degree: space.degree });
        }
        let mut trip: [Vec<(usize, usize, f64)>; 3] = [vec![], vec![], vec![]];
        for k in 0..self.len() {
            let e = space.eval(self.node(k), 2)?;
            for (a, &i) in e.idx.iter().enumerate() {
                for c in 0..3 {
                    let v = e.hess[a][c];
                    if v != 0.0 {
                        trip[c].push((k, i, v));
                    }
                }
            }
        }
        let n = self.len();
        let m = space.len();
        Ok([Csr::from_triplets(n, m, &trip[0]), Csr::from_triplets(n, m, &trip[1]), Csr::from_triplets(n, m, &trip[2])])
    }
}

/// Nodal samples of a tensor field, stored component by component.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub ncomp: usize,
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn zeros(n: usize, ncomp: usize) -> NodalField {
        NodalField { ncomp, values: vec![0.0; n * ncomp] }
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len() / self.ncomp.max(1)
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.n_nodes();
        &self.values[c * n..(c + 1) * n]
    }

    /// Linear combination a·self + b·other.
    pub fn axpby(&self, a: f64, other: &NodalField, b: f64) -> NodalField {
        NodalField {
            ncomp: self.ncomp,
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
        }
    }
}
