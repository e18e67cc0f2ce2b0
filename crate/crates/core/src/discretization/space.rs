use serde::{Deserialize, Serialize};

use super::bspline::Knots;
use super::mesh::{Facet, Mesh};
use crate::error::{Error, Result};
use crate::linalg::gauss_on;

/// Tensor-product open uniform B-spline space on a box mesh.
///
/// Scalar basis functions are numbered with the x index running fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpace {
    pub mesh: Mesh,
    pub degree: usize,
    axes: Vec<Knots>,
}

/// Active basis functions at one point, with derivatives.
#[derive(Debug, Clone, Default)]
pub struct LocalEval {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    /// Second derivatives stored as (xx, xy, yy).
    pub hess: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpaceHeader {
    pub dim: usize,
    pub degree: usize,
    pub cells: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SplineSpace {
    pub fn new(mesh: Mesh, degree: usize) -> Result<SplineSpace> {
        if degree < 1 {
            return Err(Error::InvalidInput("spline degree must be at least 1".into()));
        }
        let axes = (0..mesh.dim).map(|a| Knots::open_uniform(degree, mesh.cells[a], mesh.lo[a], mesh.hi[a])).collect();
        Ok(SplineSpace { mesh, degree, axes })
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim
    }

    pub fn n_axis(&self, axis: usize) -> usize {
        if axis < self.mesh.dim {
            self.axes[axis].n_basis()
        } else {
            1
        }
    }

    /// Number of scalar basis functions.
    pub fn len(&self) -> usize {
        self.n_axis(0) * self.n_axis(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Active functions per point.
    pub fn n_local(&self) -> usize {
        (self.degree + 1).pow(self.mesh.dim as u32)
    }

    pub fn knots(&self, axis: usize) -> &Knots {
        &self.axes[axis]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n_axis(0) * j
    }

    pub fn header(&self) -> SpaceHeader {
        let d = self.mesh.dim;
        SpaceHeader {
            dim: d,
            degree: self.degree,
            cells: self.mesh.cells[..d].to_vec(),
            lo: self.mesh.lo[..d].to_vec(),
            hi: self.mesh.hi[..d].to_vec(),
        }
    }

    /// Greville points of the tensor basis, in basis order.
    pub fn greville(&self) -> Vec<[f64; 2]> {
        let gx = self.axes[0].greville();
        let gy = if self.mesh.dim == 2 { self.axes[1].greville() } else { vec![0.0] };
        let mut out = Vec::with_capacity(self.len());
        for y in &gy {
            for x in &gx {
                out.push([*x, *y]);
            }
        }
        out
    }

    /// Boundary rows: indices of basis functions not vanishing on a facet.
    /// With open knot vectors these alone determine the trace.
    pub fn facet_dofs(&self, f: Facet) -> Vec<usize> {
        let (axis, upper) = f.axis();
        let nx = self.n_axis(0);
        let ny = self.n_axis(1);
        let mut out = Vec::new();
        if axis == 0 {
            let i = if upper { nx - 1 } else { 0 };
            for j in 0..ny {
                out.push(self.index(i, j));
            }
        } else {
            let j = if upper { ny - 1 } else { 0 };
            for i in 0..nx {
                out.push(self.index(i, j));
            }
        }
        out
    }

    /// Evaluates active basis functions at `x`, with `nd` derivative orders
    /// (0, 1 or 2), optionally forcing the cell (for one-sided evaluation).
    pub fn eval_in_cell(&self, x: [f64; 2], cell: [usize; 2], nd: usize) -> LocalEval {
        let d = self.mesh.dim;
        let p = self.degree;
        let dx = self.axes[0].ders(x[0], cell[0], nd.min(p));
        let get = |v: &Vec<Vec<f64>>, k: usize, j: usize| if k < v.len() { v[k][j] } else { 0.0 };
        let mut out = LocalEval::default();
        let n = self.n_local();
        out.idx.reserve(n);
        out.val.reserve(n);
        if d == 1 {
            for i in 0..=p {
                out.idx.push(cell[0] + i);
                out.val.push(dx[0][i]);
                out.grad.push([get(&dx, 1, i), 0.0]);
                out.hess.push([get(&dx, 2, i), 0.0, 0.0]);
            }
            return out;
        }
        let dy = self.axes[1].ders(x[1], cell[1], nd.min(p));
        for j in 0..=p {
            for i in 0..=p {
                out.idx.push(self.index(cell[0] + i, cell[1] + j));
                out.val.push(dx[0][i] * dy[0][j]);
                if nd >= 1 {
                    out.grad.push([get(&dx, 1, i) * dy[0][j], dx[0][i] * get(&dy, 1, j)]);
                }
                if nd >= 2 {
                    out.hess.push([
                        get(&dx, 2, i) * dy[0][j],
                        get(&dx, 1, i) * get(&dy, 1, j),
                        dx[0][i] * get(&dy, 2, j),
                    ]);
                }
            }
        }
        out
    }

    pub fn cell_of(&self, x: [f64; 2]) -> [usize; 2] {
        let c0 = self.axes[0].cell_of(x[0]);
        let c1 = if self.mesh.dim == 2 { self.axes[1].cell_of(x[1]) } else { 0 };
        [c0, c1]
    }

    pub fn eval(&self, x: [f64; 2], nd: usize) -> Result<LocalEval> {
        let tol = 1e-12 * self.mesh.diameter();
        if !self.mesh.contains(x, tol) {
            return Err(Error::OutOfDomain { x: x[0], y: x[1] });
        }
        Ok(self.eval_in_cell(x, self.cell_of(x), nd))
    }

    /// Tensor Gauss quadrature table with `q` points per axis and cell.
    pub fn quadrature(&self, q: usize) -> QuadTable {
        QuadTable::build(self, q)
    }

    /// Default quadrature: `degree + 1` points per axis and cell.
    pub fn default_quadrature(&self) -> QuadTable {
        QuadTable::build(self, self.degree + 1)
    }

    pub fn boundary_quadrature(&self, facets: &[Facet], q: usize) -> Result<BoundaryTable> {
        BoundaryTable::build(self, facets, q)
    }

    pub fn refined(&self) -> SplineSpace {
        SplineSpace::new(self.mesh.refined(), self.degree).expect("refined space")
    }
}

/// Basis data precomputed at volume quadrature points.
#[derive(Debug, Clone)]
pub struct QuadTable {
    pub nloc: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub cells: Vec<[usize; 2]>,
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    pub hess: Vec<[f64; 3]>,
}

impl QuadTable {
    fn build(space: &SplineSpace, q: usize) -> QuadTable {
        let mesh = &space.mesh;
        let d = mesh.dim;
        let nloc = space.n_local();
        let mut t = QuadTable {
            nloc,
            points: vec![],
            weights: vec![],
            cells: vec![],
            idx: vec![],
            val: vec![],
            grad: vec![],
            hess: vec![],
        };
        let (hx, hy) = (mesh.h(0), mesh.h(1));
        for cy in 0..mesh.cells[1] {
            for cx in 0..mesh.cells[0] {
                let x0 = mesh.lo[0] + cx as f64 * hx;
                let (px, wx) = gauss_on(q, x0, x0 + hx);
                let (py, wy) = if d == 2 {
                    let y0 = mesh.lo[1] + cy as f64 * hy;
                    gauss_on(q, y0, y0 + hy)
                } else {
                    (vec![0.0], vec![1.0])
                };
                for (y, wyv) in py.iter().zip(&wy) {
                    for (x, wxv) in px.iter().zip(&wx) {
                        let e = space.eval_in_cell([*x, *y], [cx, cy], 2);
                        t.points.push([*x, *y]);
                        t.weights.push(wxv * wyv);
                        t.cells.push([cx, cy]);
                        t.idx.extend(e.idx);
                        t.val.extend(e.val);
                        t.grad.extend(e.grad);
                        t.hess.extend(e.hess);
                    }
                }
            }
        }
        t
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Range of the flat arrays belonging to point `q`.
    pub fn range(&self, q: usize) -> std::ops::Range<usize> {
        q * self.nloc..(q + 1) * self.nloc
    }

    pub fn value(&self, q: usize, coef: &[f64]) -> f64 {
        self.range(q).map(|k| self.val[k] * coef[self.idx[k]]).sum()
    }

    pub fn gradient(&self, q: usize, coef: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in self.range(q) {
            let c = coef[self.idx[k]];
            g[0] += self.grad[k][0] * c;
            g[1] += self.grad[k][1] * c;
        }
        g
    }

    pub fn hessian(&self, q: usize, coef: &[f64]) -> [f64; 3] {
        let mut h = [0.0; 3];
        for k in self.range(q) {
            let c = coef[self.idx[k]];
            for a in 0..3 {
                h[a] += self.hess[k][a] * c;
            }
        }
        h
    }

    /// ∫ f over the domain for values given at quadrature points.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let v: Vec<f64> = values.iter().zip(&self.weights).map(|(a, w)| a * w).collect();
        crate::linalg::pairwise_sum(&v)
    }
}

/// Basis data at boundary quadrature points of a set of facets.
#[derive(Debug, Clone)]
pub struct BoundaryTable {
    pub nloc: usize,
    pub facets: Vec<Facet>,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub normals: Vec<[f64; 2]>,
    pub facet_of: Vec<Facet>,
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
}

impl BoundaryTable {
    fn build(space: &SplineSpace, facets: &[Facet], q: usize) -> Result<BoundaryTable> {
        let mesh = &space.mesh;
        let mut t = BoundaryTable {
            nloc: space.n_local(),
            facets: facets.to_vec(),
            points: vec![],
            weights: vec![],
            normals: vec![],
            facet_of: vec![],
            idx: vec![],
            val: vec![],
            grad: vec![],
        };
        for &f in facets {
            if !mesh.has_facet(f) {
                return Err(Error::UnknownTag(f.name().to_string()));
            }
            let (axis, upper) = f.axis();
            let mut normal = [0.0; 2];
            normal[axis] = if upper { 1.0 } else { -1.0 };
            let coord = if upper { mesh.hi[axis] } else { mesh.lo[axis] };
            let mut pts: Vec<([f64; 2], f64)> = Vec::new();
            if mesh.dim == 1 {
                pts.push(([coord, 0.0], 1.0));
            } else {
                let other = 1 - axis;
                let h = mesh.h(other);
                for c in 0..mesh.cells[other] {
                    let a = mesh.lo[other] + c as f64 * h;
                    let (s, w) = gauss_on(q, a, a + h);
                    for (sv, wv) in s.iter().zip(&w) {
                        let mut x = [0.0; 2];
                        x[axis] = coord;
                        x[other] = *sv;
                        pts.push((x, *wv));
                    }
                }
            }
            for (x, w) in pts {
                let mut cell = space.cell_of(x);
                // The trace is taken from the cell adjacent to the facet.
                cell[axis] = if upper { mesh.cells[axis] - 1 } else { 0 };
                let e = space.eval_in_cell(x, cell, 1);
                t.points.push(x);
                t.weights.push(w);
                t.normals.push(normal);
                t.facet_of.push(f);
                t.idx.extend(e.idx);
                t.val.extend(e.val);
                t.grad.extend(e.grad);
            }
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn range(&self, q: usize) -> std::ops::Range<usize> {
        q * self.nloc..(q + 1) * self.nloc
    }

    pub fn value(&self, q: usize, coef: &[f64]) -> f64 {
        self.range(q).map(|k| self.val[k] * coef[self.idx[k]]).sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}
