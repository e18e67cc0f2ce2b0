use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::mesh::Facet;
use super::space::{BoundaryTable, QuadTable, SplineSpace};
use crate::error::Result;
use crate::linalg::Csr;

/// Spatially varying symmetric 2×2 coefficient, evaluated at a point.
pub type CoefficientField<'a> = dyn Fn([f64; 2]) -> [[f64; 2]; 2] + Sync + 'a;

/// Assembles Σ_q w_q · local(q, a, b) into a sparse matrix. Quadrature
/// points are processed in parallel chunks and merged in chunk order.
pub fn assemble_bilinear<F>(n: usize, quad: &QuadTable, local: F) -> Csr
where
    F: Fn(usize, usize, usize) -> f64 + Sync,
{
    let nq = quad.len();
    let nloc = quad.nloc;
    let chunk = 64;
    let parts: Vec<Vec<(usize, usize, f64)>> = (0..nq.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut trip = Vec::with_capacity(chunk * nloc * nloc);
            for q in c * chunk..((c + 1) * chunk).min(nq) {
                let w = quad.weights[q];
                let base = q * nloc;
                for a in 0..nloc {
                    for b in 0..nloc {
                        let v = w * local(q, base + a, base + b);
                        trip.push((quad.idx[base + a], quad.idx[base + b], v));
                    }
                }
            }
            trip
        })
        .collect();
    let trip: Vec<_> = parts.into_iter().flatten().collect();
    Csr::from_triplets(n, n, &trip)
}

/// Dense variant of [`assemble_bilinear`] used inside the solvers.
pub fn assemble_dense<F>(n: usize, quad: &QuadTable, local: F) -> DMatrix<f64>
where
    F: Fn(usize, usize, usize) -> f64,
{
    let mut m = DMatrix::zeros(n, n);
    let nloc = quad.nloc;
    for q in 0..quad.len() {
        let w = quad.weights[q];
        let base = q * nloc;
        for a in 0..nloc {
            let ia = quad.idx[base + a];
            for b in 0..nloc {
                m[(ia, quad.idx[base + b])] += w * local(q, base + a, base + b);
            }
        }
    }
    m
}

pub fn mass(space: &SplineSpace, quad: &QuadTable) -> Csr {
    assemble_bilinear(space.len(), quad, |_, a, b| quad.val[a] * quad.val[b])
}

/// ∫ ∇u · A ∇v with A = I when no coefficient is given.
pub fn stiffness(space: &SplineSpace, quad: &QuadTable, coef: Option<&CoefficientField>) -> Csr {
    let d = space.dim();
    let coefs: Vec<[[f64; 2]; 2]> = match coef {
        Some(f) => quad.points.iter().map(|&x| f(x)).collect(),
        None => vec![[[1.0, 0.0], [0.0, 1.0]]; quad.len()],
    };
    assemble_bilinear(space.len(), quad, |q, a, b| {
        let (ga, gb) = (quad.grad[a], quad.grad[b]);
        let k = &coefs[q];
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += ga[i] * k[i][j] * gb[j];
            }
        }
        s
    })
}

/// Mass and (optionally coefficient-weighted) stiffness matrices.
pub fn assemble_mass_stiffness(space: &SplineSpace, coef: Option<&CoefficientField>) -> (Csr, Csr) {
    let quad = space.default_quadrature();
    (mass(space, &quad), stiffness(space, &quad, coef))
}

/// ∫ f v for every basis function v, with f given at quadrature points.
pub fn load_vector(n: usize, quad: &QuadTable, f: &[f64]) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    for q in 0..quad.len() {
        let w = quad.weights[q] * f[q];
        for k in quad.range(q) {
            out[quad.idx[k]] += w * quad.val[k];
        }
    }
    out
}

/// Surface forms on a set of tagged facets.
#[derive(Debug, Clone)]
pub struct BoundaryForms {
    pub table: BoundaryTable,
    pub mass: Csr,
    n: usize,
}

impl BoundaryForms {
    /// Surface measure of the tagged facets.
    pub fn measure(&self) -> f64 {
        self.table.measure()
    }

    /// ∫_Γ g v dS for each basis function, `g(x, normal)` given pointwise.
    pub fn linear<F: Fn([f64; 2], [f64; 2]) -> f64>(&self, g: F) -> DVector<f64> {
        let t = &self.table;
        let mut out = DVector::zeros(self.n);
        for q in 0..t.len() {
            let w = t.weights[q] * g(t.points[q], t.normals[q]);
            for k in t.range(q) {
                out[t.idx[k]] += w * t.val[k];
            }
        }
        out
    }
}

/// Surface mass matrix and linear-functional builder on the tagged facets.
pub fn boundary_form(space: &SplineSpace, facets: &[Facet]) -> Result<BoundaryForms> {
    let table = space.boundary_quadrature(facets, space.degree + 1)?;
    let mut trip = Vec::with_capacity(table.len() * table.nloc * table.nloc);
    for q in 0..table.len() {
        let w = table.weights[q];
        for a in table.range(q) {
            for b in table.range(q) {
                trip.push((table.idx[a], table.idx[b], w * table.val[a] * table.val[b]));
            }
        }
    }
    let n = space.len();
    Ok(BoundaryForms { mass: Csr::from_triplets(n, n, &trip), table, n })
}

/// Same as [`boundary_form`] with facet names, e.g. `["left", "top"]`.
pub fn boundary_form_by_name(space: &SplineSpace, tags: &[&str]) -> Result<BoundaryForms> {
    let facets = tags.iter().map(|t| Facet::parse(t)).collect::<Result<Vec<_>>>()?;
    boundary_form(space, &facets)
}
