use nalgebra::{DMatrix, DVector};

use super::problem::{DynamicProblem, StateVector};
use crate::constitutive::{Mat2, Vec2};
use crate::error::{Error, Result};
use crate::galerkin::Galerkin;

/// Weak momentum residual without inertia: the first variation of
/// stored + hyperstress − Zeeman − load with respect to χ.
pub fn residual_momentum(problem: &DynamicProblem, state: &StateVector, t: f64) -> Result<Vec<f64>> {
    problem.galerkin.grad_chi(&state.chi, &state.m, &state.zeta, t)
}

/// Weak magnetization residual without the viscous term: the first
/// variation of ∫ψ(θ) + exchange − Zeeman with respect to m.
pub fn residual_magnetization(problem: &DynamicProblem, state: &StateVector, t: f64) -> Result<Vec<f64>> {
    let g = &problem.galerkin;
    g.check_determinant(&state.chi)?;
    let theta = g.values(&state.theta);
    Ok(g.grad_mz(&state.chi, &state.m, &state.zeta, &theta, t).0)
}

/// Referential mobility or conductivity at each quadrature point.
pub(crate) fn transport_tensors(
    g: &Galerkin,
    chi: &[f64],
    m: &[f64],
    z: &[f64],
    theta: &[f64],
    conductivity: bool,
) -> Result<Vec<Mat2>> {
    let th = g.values(theta);
    g.points(chi, m, z)
        .iter()
        .zip(&th)
        .map(
            |(p, &t)| {
                if conductivity {
                    g.model.conductivity(&p.f, &p.m, p.z, t)
                } else {
                    g.model.mobility(&p.f, &p.m, p.z, t)
                }
            },
        )
        .collect()
}

/// ∫∇u·T∇v with T given at the quadrature points.
pub(crate) fn weighted_stiffness(g: &Galerkin, tensors: &[Mat2]) -> DMatrix<f64> {
    let tq = &g.quad;
    crate::discretization::assembly::assemble_dense(g.n(), tq, |q, a, b| {
        let (ga, gb) = (tq.grad[a], tq.grad[b]);
        let t = &tensors[q];
        ga[0] * (t[(0, 0)] * gb[0] + t[(0, 1)] * gb[1]) + ga[1] * (t[(1, 0)] * gb[0] + t[(1, 1)] * gb[1])
    })
}

/// Boundary mass scaled by `coef`, and ∫_Γ coef·data v.
pub(crate) fn transfer_terms(g: &Galerkin, coef: f64, data: &dyn Fn([f64; 2]) -> f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = g.n();
    match &g.transfer {
        Some(tr) if coef > 0.0 => (tr.mass.to_dense() * coef, tr.linear(|x, _| coef * data(x))),
        _ => (DMatrix::zeros(n, n), DVector::zeros(n)),
    }
}

/// Data of the chemical-potential system S μ = ∂_ζ(∫ψ + interfacial) + τ₂ b_Γ,
/// S = M + τ₂(A_M + B_Γ).
pub(crate) struct ChemicalSystem {
    pub a_mb: DMatrix<f64>,
    pub b_gamma: DVector<f64>,
    pub s_chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    pub mobility: Vec<Mat2>,
}

impl ChemicalSystem {
    pub fn new(problem: &DynamicProblem, mobility: Vec<Mat2>, t: f64) -> Result<ChemicalSystem> {
        let g = &problem.galerkin;
        let loads = &g.loads;
        let a_m = weighted_stiffness(g, &mobility);
        let (bm, b_gamma) = transfer_terms(g, loads.mass_transfer, &|x| loads.chemical_potential.value(x, t));
        let a_mb = a_m + bm;
        let s = &g.mass + &a_mb * g.model.tau2;
        let s_chol = s
            .cholesky()
            .ok_or_else(|| Error::SolverDivergence("chemical-potential system is not positive definite".into()))?;
        Ok(ChemicalSystem { a_mb, b_gamma, s_chol, mobility })
    }

    pub fn rhs(&self, problem: &DynamicProblem, gz: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(gz) + &self.b_gamma * problem.galerkin.model.tau2
    }

    /// μ and the relative residual of the solve.
    pub fn solve(&self, problem: &DynamicProblem, gz: &[f64]) -> (DVector<f64>, f64) {
        let rhs = self.rhs(problem, gz);
        let mu = self.s_chol.solve(&rhs);
        let l = self.s_chol.l();
        let r = &l * (l.transpose() * &mu) - &rhs;
        (mu, r.norm() / rhs.norm().max(1e-300))
    }
}

/// Solves the holonomic constraint for μ at the given state, with the
/// mobility evaluated at the same state. Returns μ and the relative residual.
pub fn solve_chemical_potential(problem: &DynamicProblem, state: &StateVector) -> Result<(Vec<f64>, f64)> {
    let g = &problem.galerkin;
    g.check_determinant(&state.chi)?;
    let mobility = transport_tensors(g, &state.chi, &state.m, &state.zeta, &state.theta, false)?;
    let sys = ChemicalSystem::new(problem, mobility, state.t)?;
    let theta = g.values(&state.theta);
    let (_, gz) = g.grad_mz(&state.chi, &state.m, &state.zeta, &theta, state.t);
    let (mu, res) = sys.solve(problem, &gz);
    Ok((mu.iter().copied().collect(), res))
}

/// Pointwise rates entering the heat source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatRates {
    pub m_dot: Vec2,
    pub zeta_dot: f64,
    pub grad_mu: Vec2,
    /// Referential mobility.
    pub mobility: Mat2,
    /// ∂_mψ_th·ṁ + ∂_ζψ_th ζ̇, which is never regularized.
    pub adiabatic: f64,
}

/// Heat source terms at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeatSource {
    pub viscous_m: f64,
    pub viscous_zeta: f64,
    pub diffusive: f64,
    pub viscous_m_reg: f64,
    pub viscous_zeta_reg: f64,
    pub diffusive_reg: f64,
    pub adiabatic: f64,
}

impl HeatSource {
    pub fn dissipation(&self) -> f64 {
        self.viscous_m + self.viscous_zeta + self.diffusive
    }

    pub fn dissipation_reg(&self) -> f64 {
        self.viscous_m_reg + self.viscous_zeta_reg + self.diffusive_reg
    }

    /// The regularized source D_ε + adiabatic terms.
    pub fn total(&self) -> f64 {
        self.dissipation_reg() + self.adiabatic
    }
}

/// τ₁|ṁ|²/(1+ε|ṁ|²) + τ₂ζ̇²/(1+εζ̇²) + M∇μ·∇μ/(1+ε|∇μ|²) + adiabatic.
pub fn regularized_heat_source(tau1: f64, tau2: f64, rates: &HeatRates, eps: f64) -> HeatSource {
    let mm = rates.m_dot.norm_squared();
    let zz = rates.zeta_dot * rates.zeta_dot;
    let gg = rates.grad_mu.norm_squared();
    let vm = tau1 * mm;
    let vz = tau2 * zz;
    let dm = rates.grad_mu.dot(&(rates.mobility * rates.grad_mu));
    HeatSource {
        viscous_m: vm,
        viscous_zeta: vz,
        diffusive: dm,
        viscous_m_reg: vm / (1.0 + eps * mm),
        viscous_zeta_reg: vz / (1.0 + eps * zz),
        diffusive_reg: dm / (1.0 + eps * gg),
        adiabatic: rates.adiabatic,
    }
}

/// Heat sources at every quadrature point for the step prev → next, with
/// the adiabatic terms at (m, ζ) of `next` and θ of `prev`.
pub(crate) fn step_sources(
    problem: &DynamicProblem,
    prev: &StateVector,
    next: &StateVector,
    mobility: &[Mat2],
) -> Vec<HeatSource> {
    let g = &problem.galerkin;
    let model = &g.model;
    let th0 = g.values(&prev.theta);
    let pts = g.points(&next.chi, &next.m, &next.zeta);
    let n = g.n();
    (0..g.quad.len())
        .map(|q| {
            let md = Vec2::new(g.quad.value(q, &next.m_dot[..n]), g.quad.value(q, &next.m_dot[n..]));
            let zd = g.quad.value(q, &next.zeta_dot);
            let gm = g.quad.gradient(q, &next.mu);
            let p = &pts[q];
            let d = model.thermal.grad_mz(&p.m, p.z, th0[q]);
            let rates = HeatRates {
                m_dot: md,
                zeta_dot: zd,
                grad_mu: Vec2::new(gm[0], gm[1]),
                mobility: mobility[q],
                adiabatic: d[0] * md[0] + d[1] * md[1] + d[2] * zd,
            };
            regularized_heat_source(model.tau1, model.tau2, &rates, problem.eps)
        })
        .collect()
}
