use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::constitutive::{legendre_internal_energy, temperature_at_entropy};
use crate::discretization::{DiscreteField, Facet};
use crate::error::{Error, Result};
use crate::galerkin::Galerkin;
use crate::magnetostatics::{
    check_admissible, ciarlet_necas_gap, deposited_energy, GapOptions, GapReport, PoissonOperator, SpatialGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StaticOptions {
    pub max_iterations: usize,
    /// Bound on the projected-gradient dual norm per unit area.
    pub tol_grad: f64,
    pub tol_con: f64,
    /// Admissible Ciarlet–Nečas gap as a fraction of |Ω|.
    pub tol_cn: f64,
    /// L-BFGS memory.
    pub memory: usize,
    pub armijo: f64,
    pub gap_samples: usize,
    pub seed: u64,
    /// Largest change of χ per iteration, in units of the mesh size.
    pub max_displacement: f64,
    /// Time at which the load profiles are evaluated.
    pub load_time: f64,
    pub magnetostatics: bool,
}

impl Default for StaticOptions {
    fn default() -> Self {
        StaticOptions {
            max_iterations: 2000,
            tol_grad: 1e-6,
            tol_con: 1e-8,
            tol_cn: 1e-3,
            memory: 12,
            armijo: 1e-4,
            gap_samples: 20_000,
            seed: 0x5eed,
            max_displacement: 0.25,
            load_time: 0.0,
            magnetostatics: true,
        }
    }
}

/// Coefficients of (χ, m, ζ, s), vector fields component-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticState {
    pub chi: Vec<f64>,
    pub m: Vec<f64>,
    pub zeta: Vec<f64>,
    pub s: Vec<f64>,
}

impl StaticState {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.chi.len() * 3);
        v.extend_from_slice(&self.chi);
        v.extend_from_slice(&self.m);
        v.extend_from_slice(&self.zeta);
        v.extend_from_slice(&self.s);
        v
    }

    pub fn from_vec(v: &[f64], n: usize) -> StaticState {
        StaticState {
            chi: v[..2 * n].to_vec(),
            m: v[2 * n..4 * n].to_vec(),
            zeta: v[4 * n..5 * n].to_vec(),
            s: v[5 * n..6 * n].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StaticEnergyReport {
    /// ∫ẽ(∇χ, m, ζ, s).
    pub bulk: f64,
    pub exchange: f64,
    pub interfacial: f64,
    pub hyperstress: f64,
    pub magnetostatic: f64,
    pub load: f64,
    pub zeeman: f64,
    pub total: f64,
    pub min_det: f64,
    pub theta_min: f64,
}

pub struct StaticProblem {
    pub galerkin: Galerkin,
    pub dirichlet: Vec<Facet>,
    /// Prescribed χ coefficients (full length); only Γ_D rows are used.
    pub chi_d: Vec<f64>,
    pub z_tot: f64,
    pub s_tot: f64,
    pub grid: SpatialGrid,
    pub poisson: PoissonOperator,
    pub options: StaticOptions,
    warm: Mutex<Option<Vec<f64>>>,
}

pub(crate) struct Evaluation {
    pub report: StaticEnergyReport,
    pub gradient: Option<Vec<f64>>,
    pub theta: Vec<f64>,
}

impl StaticProblem {
    /// Clamps Γ_D to the identity map.
    pub fn new(
        galerkin: Galerkin,
        dirichlet: Vec<Facet>,
        z_tot: f64,
        s_tot: f64,
        grid: SpatialGrid,
        options: StaticOptions,
    ) -> Result<StaticProblem> {
        if dirichlet.is_empty() {
            return Err(Error::InvalidInput("static problems need a nonempty Dirichlet boundary".into()));
        }
        let mesh = &galerkin.space.mesh;
        for f in &dirichlet {
            if !mesh.has_facet(*f) || mesh.facet_measure(*f) <= 0.0 {
                return Err(Error::UnknownTag(f.name().into()));
            }
        }
        if !grid.contains_box(mesh.lo, mesh.hi, 0.0) {
            return Err(Error::InvalidInput("the magnetostatic grid must contain the reference domain".into()));
        }
        let chi_d = galerkin.identity_map();
        let poisson = PoissonOperator::new(&grid);
        Ok(StaticProblem { galerkin, dirichlet, chi_d, z_tot, s_tot, grid, poisson, options, warm: Mutex::new(None) })
    }

    pub fn n(&self) -> usize {
        self.galerkin.n()
    }

    /// Indices (into the χ block) of coefficients fixed by Γ_D.
    pub fn clamped(&self) -> Vec<usize> {
        let n = self.n();
        let mut rows: Vec<usize> = self.dirichlet.iter().flat_map(|f| self.galerkin.space.facet_dofs(*f)).collect();
        rows.sort_unstable();
        rows.dedup();
        let mut out = rows.clone();
        out.extend(rows.iter().map(|r| r + n));
        out
    }

    pub fn gap_options(&self) -> GapOptions {
        GapOptions {
            samples: self.options.gap_samples,
            seed: self.options.seed,
            tolerance: self.options.tol_cn,
            ..GapOptions::default()
        }
    }

    pub fn chi_field(&self, chi: &[f64]) -> Result<DiscreteField> {
        DiscreteField::new(self.galerkin.space.clone(), chi.to_vec(), 2)
    }

    pub fn gap(&self, chi: &[f64]) -> Result<GapReport> {
        Ok(ciarlet_necas_gap(&self.chi_field(chi)?, &self.gap_options()))
    }

    pub fn constraint_residuals(&self, st: &StaticState) -> (f64, f64) {
        (self.galerkin.integral(&st.zeta) - self.z_tot, self.galerkin.integral(&st.s) - self.s_tot)
    }

    pub(crate) fn evaluate(&self, st: &StaticState, with_gradient: bool) -> Result<Evaluation> {
        let g = &self.galerkin;
        let n = g.n();
        let model = &g.model;
        let t = self.options.load_time;
        let (min_det, at) = g.min_det(&st.chi);
        if !(min_det > 0.0) {
            return Err(Error::DegenerateDeformation {
                det: min_det,
                location: format!("({:.4}, {:.4})", at[0], at[1]),
            });
        }
        let pts = g.points(&st.chi, &st.m, &st.zeta);
        let mut theta = Vec::with_capacity(pts.len());
        let mut bulk = 0.0;
        for (q, p) in pts.iter().enumerate() {
            let s = g.quad.value(q, &st.s);
            theta.push(temperature_at_entropy(model, &p.m, p.z, s)?);
            let e = legendre_internal_energy(model, &p.f, &p.m, p.z, s);
            if !e.is_finite() {
                return Err(Error::OutOfRange(format!(
                    "internal energy is infinite at ({:.4}, {:.4})",
                    p.x[0], p.x[1]
                )));
            }
            bulk += g.quad.weights[q] * e;
        }
        let items = g.mechanical_items(&st.chi, &st.m, &st.zeta, t)?;

        let mut magnetostatic = 0.0;
        let mut mag_grad = None;
        if self.options.magnetostatics {
            let positions: Vec<[f64; 2]> = pts.iter().map(|p| [p.chi[0], p.chi[1]]).collect();
            let moments: Vec<[f64; 2]> = pts
                .iter()
                .zip(&g.quad.weights)
                .map(|(p, w)| {
                    let fm = p.f * p.m;
                    [w * fm[0], w * fm[1]]
                })
                .collect();
            let warm = self.warm.lock().expect("warm start").clone();
            let de = deposited_energy(&self.poisson, &positions, &moments, warm.as_deref())?;
            // stationary form: second-order accurate in the potential error
            magnetostatic = 2.0 * de.solution.energy_moment - de.solution.energy;
            *self.warm.lock().expect("warm start") = Some(de.solution.phi.clone());
            mag_grad = Some(de);
        }

        let report = StaticEnergyReport {
            bulk,
            exchange: items.exchange,
            interfacial: items.interfacial,
            hyperstress: items.hyperstress,
            magnetostatic,
            load: items.load,
            zeeman: items.zeeman,
            total: bulk + items.exchange + items.interfacial + items.hyperstress + magnetostatic
                - items.load
                - items.zeeman,
            min_det,
            theta_min: theta.iter().copied().fold(f64::INFINITY, f64::min),
        };
        if !with_gradient {
            return Ok(Evaluation { report, gradient: None, theta });
        }

        let mut grad = vec![0.0; 6 * n];
        let gc = g.grad_chi(&st.chi, &st.m, &st.zeta, t)?;
        grad[..2 * n].copy_from_slice(&gc);
        let (gm, gz) = g.grad_mz(&st.chi, &st.m, &st.zeta, &theta, t);
        grad[2 * n..4 * n].copy_from_slice(&gm);
        grad[4 * n..5 * n].copy_from_slice(&gz);
        let tq = &g.quad;
        for q in 0..tq.len() {
            let w = tq.weights[q] * theta[q];
            for k in tq.range(q) {
                grad[5 * n + tq.idx[k]] += w * tq.val[k];
            }
        }
        if let Some(de) = mag_grad {
            for (q, p) in pts.iter().enumerate() {
                let w = tq.weights[q];
                let dp = de.d_position[q];
                let dm = de.d_moment[q];
                let ftdm = p.f.transpose() * crate::constitutive::Vec2::new(dm[0], dm[1]);
                for k in tq.range(q) {
                    let a = tq.idx[k];
                    let (v, gr) = (tq.val[k], tq.grad[k]);
                    let mg = p.m[0] * gr[0] + p.m[1] * gr[1];
                    for i in 0..2 {
                        grad[i * n + a] += dp[i] * v + w * dm[i] * mg;
                        grad[2 * n + i * n + a] += w * ftdm[i] * v;
                    }
                }
            }
        }
        Ok(Evaluation { report, gradient: Some(grad), theta })
    }
}

/// Itemized Ũ = Ẽ − 𝓛 − 𝓩 including the magnetostatic energy. Checks
/// J > 0 and the Ciarlet–Nečas condition first.
pub fn total_static_energy(problem: &StaticProblem, state: &StaticState) -> Result<StaticEnergyReport> {
    if problem.options.magnetostatics {
        check_admissible(&problem.chi_field(&state.chi)?, &problem.gap_options())?;
    }
    Ok(problem.evaluate(state, false)?.report)
}

/// First variation of Ũ with respect to all coefficients, ordered
/// (χ, m, ζ, s).
pub fn static_gradient(problem: &StaticProblem, state: &StaticState) -> Result<Vec<f64>> {
    Ok(problem.evaluate(state, true)?.gradient.expect("gradient requested"))
}

/// θ = ∂_sẽ at the quadrature points.
pub fn temperature_from_entropy(problem: &StaticProblem, state: &StaticState) -> Result<Vec<f64>> {
    let g = &problem.galerkin;
    g.points(&state.chi, &state.m, &state.zeta)
        .iter()
        .enumerate()
        .map(|(q, p)| temperature_at_entropy(&g.model, &p.m, p.z, g.quad.value(q, &state.s)))
        .collect()
}

/// The ground state χ = id, m = 0, ζ = ζ_ref, s = s(θ_ref).
pub fn ground_state(problem: &StaticProblem, theta_ref: f64) -> StaticState {
    let g = &problem.galerkin;
    let n = g.n();
    let model = &g.model;
    let zr = model.zeta_ref;
    let s = crate::constitutive::thermal_closure(model, &crate::constitutive::Vec2::zeros(), zr, theta_ref).s;
    StaticState { chi: problem.chi_d.clone(), m: vec![0.0; 2 * n], zeta: vec![zr; n], s: vec![s; n] }
}
