//! Discrete energy terms on the spline space, shared by the static and
//! dynamic solvers. Vector fields are stored component-major.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3};
use serde::Serialize;

use crate::constitutive::{Mat2, MaterialModel, Vec2};
use crate::discretization::{boundary_form, BoundaryForms, BoundaryTable, Mesh, QuadTable, SplineSpace};
use crate::error::{Error, Result};
use crate::hyperstress::{GagliardoOperator, KernelSpec, PairQuadrature};
use crate::loads::LoadSet;

/// Fields evaluated at one quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct PointFields {
    pub x: [f64; 2],
    pub chi: Vec2,
    pub f: Mat2,
    pub m: Vec2,
    /// Row i is ∇m_i.
    pub grad_m: Mat2,
    pub z: f64,
    pub grad_z: Vec2,
}

/// Energy items that do not involve temperature or entropy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MechanicalItems {
    /// ∫ψ_me(∇χ, m, ζ).
    pub stored: f64,
    pub exchange: f64,
    pub interfacial: f64,
    pub hyperstress: f64,
    /// ∫𝗵_e(χ)·∇χ m.
    pub zeeman: f64,
    /// ∫f·χ + ∫_Γ g·χ.
    pub load: f64,
}

impl MechanicalItems {
    pub fn potential(&self) -> f64 {
        self.stored + self.exchange + self.interfacial + self.hyperstress - self.zeeman - self.load
    }
}

#[derive(Debug, Clone)]
pub struct Galerkin {
    pub model: MaterialModel,
    pub kernel: KernelSpec,
    pub space: Arc<SplineSpace>,
    pub quad: QuadTable,
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// 𝓗(∇²χ) = ½ Σ_i χ_iᵀ B χ_i.
    pub hyper: DMatrix<f64>,
    pub operator: Arc<GagliardoOperator>,
    pub loads: LoadSet,
    pub traction: Option<BoundaryTable>,
    /// Surface forms on the mass and heat transfer facets.
    pub transfer: Option<BoundaryForms>,
}

impl Galerkin {
    pub fn new(
        model: MaterialModel,
        mesh: &Mesh,
        degree: usize,
        kernel: &KernelSpec,
        loads: LoadSet,
    ) -> Result<Galerkin> {
        let op = GagliardoOperator::new(mesh, degree, kernel, &PairQuadrature::default())?;
        Self::with_operator(model, mesh, degree, kernel, Arc::new(op), loads)
    }

    /// Reuses a prebuilt Gagliardo operator (it depends only on mesh,
    /// degree and kernel).
    pub fn with_operator(
        model: MaterialModel,
        mesh: &Mesh,
        degree: usize,
        kernel: &KernelSpec,
        op: Arc<GagliardoOperator>,
        loads: LoadSet,
    ) -> Result<Galerkin> {
        if mesh.dim != 2 {
            return Err(Error::InvalidInput("the solvers require a two-dimensional mesh".into()));
        }
        if degree < 2 {
            return Err(Error::UnsupportedOrder { order: 2, needed: 2, degree });
        }
        loads.validate()?;
        let space = Arc::new(SplineSpace::new(mesh.clone(), degree)?);
        let quad = space.default_quadrature();
        let mass = crate::discretization::assembly::mass(&space, &quad).to_dense();
        let stiffness = crate::discretization::assembly::stiffness(&space, &quad, None).to_dense();
        let hyper = op.hessian_form(&space)?;
        let traction = if loads.traction.is_zero() || loads.traction_facets.is_empty() {
            None
        } else {
            Some(space.boundary_quadrature(&loads.traction_facets, degree + 1)?)
        };
        let transfer =
            if loads.transfer_facets.is_empty() { None } else { Some(boundary_form(&space, &loads.transfer_facets)?) };
        Ok(Galerkin {
            model,
            kernel: *kernel,
            space,
            quad,
            mass,
            stiffness,
            hyper,
            operator: op,
            loads,
            traction,
            transfer,
        })
    }

    /// Number of scalar basis functions.
    pub fn n(&self) -> usize {
        self.space.len()
    }

    pub fn point(&self, q: usize, chi: &[f64], m: &[f64], z: &[f64]) -> PointFields {
        let n = self.n();
        let t = &self.quad;
        let (mut c, mut f, mut mv, mut gm, mut zv, mut gz) =
            (Vec2::zeros(), Mat2::zeros(), Vec2::zeros(), Mat2::zeros(), 0.0, Vec2::zeros());
        for k in t.range(q) {
            let a = t.idx[k];
            let (v, g) = (t.val[k], t.grad[k]);
            for i in 0..2 {
                let ci = chi[i * n + a];
                c[i] += v * ci;
                f[(i, 0)] += g[0] * ci;
                f[(i, 1)] += g[1] * ci;
                let mi = m[i * n + a];
                mv[i] += v * mi;
                gm[(i, 0)] += g[0] * mi;
                gm[(i, 1)] += g[1] * mi;
            }
            zv += v * z[a];
            gz[0] += g[0] * z[a];
            gz[1] += g[1] * z[a];
        }
        PointFields { x: t.points[q], chi: c, f, m: mv, grad_m: gm, z: zv, grad_z: gz }
    }

    pub fn points(&self, chi: &[f64], m: &[f64], z: &[f64]) -> Vec<PointFields> {
        (0..self.quad.len()).map(|q| self.point(q, chi, m, z)).collect()
    }

    /// Scalar field values at the quadrature points.
    pub fn values(&self, coef: &[f64]) -> Vec<f64> {
        (0..self.quad.len()).map(|q| self.quad.value(q, coef)).collect()
    }

    /// Smallest det ∇χ over the quadrature points, with its location.
    pub fn min_det(&self, chi: &[f64]) -> (f64, [f64; 2]) {
        let n = self.n();
        let mut best = (f64::INFINITY, [0.0; 2]);
        for q in 0..self.quad.len() {
            let gx = self.quad.gradient(q, &chi[..n]);
            let gy = self.quad.gradient(q, &chi[n..2 * n]);
            let j = gx[0] * gy[1] - gx[1] * gy[0];
            if j < best.0 {
                best = (j, self.quad.points[q]);
            }
        }
        best
    }

    pub fn check_determinant(&self, chi: &[f64]) -> Result<f64> {
        let (j, x) = self.min_det(chi);
        if !(j > 0.0) {
            return Err(Error::DegenerateDeformation { det: j, location: format!("({:.4}, {:.4})", x[0], x[1]) });
        }
        Ok(j)
    }

    fn quadratic(&self, mat: &DMatrix<f64>, u: &[f64]) -> f64 {
        let n = self.n();
        let mut s = 0.0;
        for i in 0..n {
            let mut r = 0.0;
            for j in 0..n {
                r += mat[(i, j)] * u[j];
            }
            s += u[i] * r;
        }
        0.5 * s
    }

    fn mat_vec_add(&self, mat: &DMatrix<f64>, u: &[f64], scale: f64, out: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let mut r = 0.0;
            for j in 0..n {
                r += mat[(i, j)] * u[j];
            }
            out[i] += scale * r;
        }
    }

    /// 𝓗(∇²χ) in the pair-difference form, which avoids the cancellation
    /// of the expanded quadratic form.
    pub fn hyperstress_energy(&self, chi: &[f64]) -> Result<f64> {
        self.operator.energy(&self.operator.sample_hessian(&self.space, chi)?)
    }

    pub fn mechanical_items(&self, chi: &[f64], m: &[f64], z: &[f64], t: f64) -> Result<MechanicalItems> {
        let n = self.n();
        let model = &self.model;
        let mut it = MechanicalItems::default();
        for q in 0..self.quad.len() {
            let p = self.point(q, chi, m, z);
            let w = self.quad.weights[q];
            let psi = model.psi_me(&p.f, &p.m, p.z);
            if !psi.is_finite() {
                return Err(Error::DegenerateDeformation {
                    det: p.f.determinant(),
                    location: format!("({:.4}, {:.4})", p.x[0], p.x[1]),
                });
            }
            it.stored += w * psi;
            let h = self.loads.field.value([p.chi[0], p.chi[1]], t);
            let fm = p.f * p.m;
            it.zeeman += w * (h[0] * fm[0] + h[1] * fm[1]);
            let b = self.loads.body_force.value(p.x, t);
            it.load += w * (b[0] * p.chi[0] + b[1] * p.chi[1]);
        }
        if let Some(tb) = &self.traction {
            for q in 0..tb.len() {
                let g = self.loads.traction.value(tb.points[q], t);
                it.load += tb.weights[q] * (g[0] * tb.value(q, &chi[..n]) + g[1] * tb.value(q, &chi[n..]));
            }
        }
        it.exchange =
            model.kappa1 * (self.quadratic(&self.stiffness, &m[..n]) + self.quadratic(&self.stiffness, &m[n..]));
        it.interfacial = model.kappa2 * self.quadratic(&self.stiffness, z);
        it.hyperstress = self.hyperstress_energy(chi)?;
        Ok(it)
    }

    /// ∂/∂χ of stored + hyperstress − Zeeman − load.
    pub fn grad_chi(&self, chi: &[f64], m: &[f64], z: &[f64], t: f64) -> Result<Vec<f64>> {
        let n = self.n();
        let tq = &self.quad;
        let mut g = vec![0.0; 2 * n];
        for q in 0..tq.len() {
            let p = self.point(q, chi, m, z);
            let w = tq.weights[q];
            let s = self.model.stress(&p.f, &p.m, p.z)?;
            let pos = [p.chi[0], p.chi[1]];
            let h = self.loads.field.value(pos, t);
            let gh = self.loads.field.gradient(pos, t);
            let fm = p.f * p.m;
            let b = self.loads.body_force.value(p.x, t);
            // position derivative of the Zeeman density and the body force
            let dpos = [gh[(0, 0)] * fm[0] + gh[(1, 0)] * fm[1] + b[0], gh[(0, 1)] * fm[0] + gh[(1, 1)] * fm[1] + b[1]];
            for k in tq.range(q) {
                let a = tq.idx[k];
                let (v, gr) = (tq.val[k], tq.grad[k]);
                let mgrad = p.m[0] * gr[0] + p.m[1] * gr[1];
                for i in 0..2 {
                    let sg = s[(i, 0)] * gr[0] + s[(i, 1)] * gr[1];
                    g[i * n + a] += w * (sg - dpos[i] * v - h[i] * mgrad);
                }
            }
        }
        if let Some(tb) = &self.traction {
            for q in 0..tb.len() {
                let gt = self.loads.traction.value(tb.points[q], t);
                for k in tb.range(q) {
                    let a = tb.idx[k];
                    g[a] -= tb.weights[q] * gt[0] * tb.val[k];
                    g[n + a] -= tb.weights[q] * gt[1] * tb.val[k];
                }
            }
        }
        self.mat_vec_add(&self.hyper, &chi[..n], 1.0, &mut g[..n]);
        self.mat_vec_add(&self.hyper, &chi[n..], 1.0, &mut g[n..]);
        Ok(g)
    }

    /// Hessian of stored + hyperstress − Zeeman − load with respect to χ.
    pub fn hess_chi(&self, chi: &[f64], m: &[f64], z: &[f64], t: f64) -> Result<DMatrix<f64>> {
        let n = self.n();
        let tq = &self.quad;
        let nloc = tq.nloc;
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        let field_on = !self.loads.field.is_zero();
        for q in 0..tq.len() {
            let p = self.point(q, chi, m, z);
            let w = tq.weights[q];
            let tan = self.model.stress_tangent(&p.f, &p.m, p.z)?;
            let r = tq.range(q);
            let (idx, val, grad) = (&tq.idx[r.clone()], &tq.val[r.clone()], &tq.grad[r]);
            for a in 0..nloc {
                let ga = grad[a];
                for b in 0..nloc {
                    let gb = grad[b];
                    for i in 0..2 {
                        for k in 0..2 {
                            let mut v = 0.0;
                            for j in 0..2 {
                                for l in 0..2 {
                                    v += tan[(2 * i + j, 2 * k + l)] * ga[j] * gb[l];
                                }
                            }
                            h[(i * n + idx[a], k * n + idx[b])] += w * v;
                        }
                    }
                }
            }
            if field_on {
                let pos = [p.chi[0], p.chi[1]];
                let gh = self.loads.field.gradient(pos, t);
                let hh = self.loads.field.hessian(pos, t);
                let fm = p.f * p.m;
                for a in 0..nloc {
                    let ma = p.m[0] * grad[a][0] + p.m[1] * grad[a][1];
                    for b in 0..nloc {
                        let mb = p.m[0] * grad[b][0] + p.m[1] * grad[b][1];
                        for i in 0..2 {
                            for l in 0..2 {
                                let mut v = (hh[0][(i, l)] * fm[0] + hh[1][(i, l)] * fm[1]) * val[a] * val[b];
                                v += gh[(i, l)] * ma * val[b] + gh[(l, i)] * mb * val[a];
                                h[(i * n + idx[a], l * n + idx[b])] -= w * v;
                            }
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let b = self.hyper[(i, j)];
                h[(i, j)] += b;
                h[(n + i, n + j)] += b;
            }
        }
        Ok(h)
    }

    /// ∂/∂(m, ζ) of ∫ψ(∇χ, m, ζ, θ_q) + exchange + interfacial − Zeeman,
    /// with θ_q given at the quadrature points.
    pub fn grad_mz(&self, chi: &[f64], m: &[f64], z: &[f64], theta_q: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let tq = &self.quad;
        let mut gm = vec![0.0; 2 * n];
        let mut gz = vec![0.0; n];
        for q in 0..tq.len() {
            let p = self.point(q, chi, m, z);
            let w = tq.weights[q];
            let d = self.model.grad_mz(&p.f, &p.m, p.z, theta_q[q]);
            let h = self.loads.field.value([p.chi[0], p.chi[1]], t);
            let fth = p.f.transpose() * Vec2::new(h[0], h[1]);
            for k in tq.range(q) {
                let a = tq.idx[k];
                let v = tq.val[k];
                gm[a] += w * (d[0] - fth[0]) * v;
                gm[n + a] += w * (d[1] - fth[1]) * v;
                gz[a] += w * d[2] * v;
            }
        }
        let k1 = self.model.kappa1;
        self.mat_vec_add(&self.stiffness, &m[..n], k1, &mut gm[..n]);
        self.mat_vec_add(&self.stiffness, &m[n..], k1, &mut gm[n..]);
        self.mat_vec_add(&self.stiffness, z, self.model.kappa2, &mut gz);
        (gm, gz)
    }

    /// Hessian of the functional in [`Galerkin::grad_mz`], ordered (m₁, m₂, ζ).
    pub fn hess_mz(&self, chi: &[f64], m: &[f64], z: &[f64], theta_q: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let tq = &self.quad;
        let mut h = DMatrix::zeros(3 * n, 3 * n);
        for q in 0..tq.len() {
            let p = self.point(q, chi, m, z);
            let w = tq.weights[q];
            let hz: Matrix3<f64> = self.model.hess_mz(&p.f, &p.m, p.z, theta_q[q]);
            for ka in tq.range(q) {
                let (a, va) = (tq.idx[ka], tq.val[ka]);
                for kb in tq.range(q) {
                    let (b, vb) = (tq.idx[kb], tq.val[kb]);
                    let s = w * va * vb;
                    for i in 0..3 {
                        for j in 0..3 {
                            h[(i * n + a, j * n + b)] += s * hz[(i, j)];
                        }
                    }
                }
            }
        }
        let (k1, k2) = (self.model.kappa1, self.model.kappa2);
        for i in 0..n {
            for j in 0..n {
                let s = self.stiffness[(i, j)];
                h[(i, j)] += k1 * s;
                h[(n + i, n + j)] += k1 * s;
                h[(2 * n + i, 2 * n + j)] += k2 * s;
            }
        }
        h
    }

    /// Coefficients of the identity map, exact because B-splines reproduce
    /// linear functions through their Greville abscissae.
    pub fn identity_map(&self) -> Vec<f64> {
        let gr = self.space.greville();
        let n = self.n();
        let mut c = vec![0.0; 2 * n];
        for (a, x) in gr.iter().enumerate() {
            c[a] = x[0];
            c[n + a] = x[1];
        }
        c
    }

    /// ∫N_a for every basis function.
    pub fn integrals(&self) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|j| self.mass[(i, j)]).sum()).collect()
    }

    pub fn integral(&self, coef: &[f64]) -> f64 {
        self.integrals().iter().zip(coef).map(|(a, b)| a * b).sum()
    }

    /// L² projection of a scalar function.
    pub fn project(&self, f: &dyn Fn([f64; 2]) -> f64) -> Result<Vec<f64>> {
        let vals: Vec<f64> = self.quad.points.iter().map(|&x| f(x)).collect();
        let b = crate::discretization::assembly::load_vector(self.n(), &self.quad, &vals);
        Ok(crate::linalg::solve_dense(&self.mass, &b)?.iter().copied().collect())
    }
}
