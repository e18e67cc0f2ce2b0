use serde::Serialize;

use super::problem::{DynamicProblem, StateVector};
use super::residuals::{step_sources, transfer_terms, transport_tensors, HeatSource};
use super::step::Trajectory;
use crate::constitutive::Vec2;
use crate::discretization::DiscreteField;
use crate::error::Result;
use crate::galerkin::{Galerkin, MechanicalItems};
use crate::hyperstress::{estimate_bound_inputs, BoundInputs};

/// Energy items of one state together with the step integrals of the step
/// that produced it (zero for the initial state).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EnergyReport {
    pub t: f64,
    pub kinetic: f64,
    pub stored: f64,
    pub exchange: f64,
    pub interfacial: f64,
    pub hyperstress: f64,
    pub zeeman: f64,
    pub load: f64,
    /// ∫w with w = e_th(m, ζ, θ).
    pub thermal: f64,
    pub dissipation_m: f64,
    pub dissipation_zeta: f64,
    pub dissipation_mu: f64,
    /// Regularized dissipation fed to the heat equation.
    pub dissipation_reg: f64,
    pub adiabatic: f64,
    /// Work of the explicitly time-dependent loads.
    pub load_work: f64,
    /// ∫_Γ M(μ_e − μ)μ over the step.
    pub chemical_flux: f64,
    /// ∫_Γ K(θ_e/(1+εθ_e) − θ) over the step.
    pub heat_flux: f64,
    /// Accumulated balance defects relative to the initial total energy.
    pub residual_alpha0: f64,
    pub residual_alpha1: f64,
    /// Defect of the v = 1 row of the heat equation over the step.
    pub enthalpy_defect: f64,
    pub mass: f64,
    pub theta_min: f64,
    pub j_min: f64,
}

impl EnergyReport {
    /// Kinetic plus mechanical potential energy.
    pub fn mechanical(&self) -> f64 {
        self.kinetic + self.stored + self.exchange + self.interfacial + self.hyperstress - self.zeeman - self.load
    }

    pub fn total(&self) -> f64 {
        self.mechanical() + self.thermal
    }

    pub fn dissipation(&self) -> f64 {
        self.dissipation_m + self.dissipation_zeta + self.dissipation_mu
    }

    pub fn residual(&self, alpha: u8) -> f64 {
        if alpha == 0 {
            self.residual_alpha0
        } else {
            self.residual_alpha1
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Audit {
    pub reports: Vec<EnergyReport>,
    pub residual_alpha0: f64,
    pub residual_alpha1: f64,
    pub enthalpy_defect: f64,
    /// |E₀ + ∫w₀|, the normalization of the residuals.
    pub scale: f64,
}

fn kinetic(g: &Galerkin, v: &[f64]) -> f64 {
    let n = g.n();
    let mut e = 0.0;
    for c in 0..2 {
        let vc = &v[c * n..(c + 1) * n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += g.mass[(i, j)] * vc[j];
            }
            e += vc[i] * s;
        }
    }
    0.5 * g.model.rho * e
}

fn thermal_energy(g: &Galerkin, st: &StateVector) -> f64 {
    let th = g.values(&st.theta);
    let vals: Vec<f64> =
        g.points(&st.chi, &st.m, &st.zeta).iter().zip(&th).map(|(p, &t)| g.model.e_th(&p.m, p.z, t)).collect();
    g.quad.integrate(&vals)
}

fn base_report(g: &Galerkin, st: &StateVector) -> Result<EnergyReport> {
    let it: MechanicalItems = g.mechanical_items(&st.chi, &st.m, &st.zeta, st.t)?;
    let theta_min = g.values(&st.theta).into_iter().fold(f64::INFINITY, f64::min);
    Ok(EnergyReport {
        t: st.t,
        kinetic: kinetic(g, &st.v),
        stored: it.stored,
        exchange: it.exchange,
        interfacial: it.interfacial,
        hyperstress: it.hyperstress,
        zeeman: it.zeeman,
        load: it.load,
        thermal: thermal_energy(g, st),
        mass: g.integral(&st.zeta),
        theta_min,
        j_min: g.min_det(&st.chi).0,
        ..EnergyReport::default()
    })
}

/// −∫∂_t𝗵_e(χ)·∇χ m − ∫ḟ·χ − ∫_Γ ġ·χ at the given state and time.
fn load_power(g: &Galerkin, chi: &[f64], m: &[f64], z: &[f64], t: f64) -> f64 {
    let n = g.n();
    let loads = &g.loads;
    let mut p = 0.0;
    for q in 0..g.quad.len() {
        let pf = g.point(q, chi, m, z);
        let w = g.quad.weights[q];
        let hd = loads.field.rate([pf.chi[0], pf.chi[1]], t);
        let fm = pf.f * pf.m;
        let fd = loads.body_force.rate(pf.x, t);
        p -= w * (hd[0] * fm[0] + hd[1] * fm[1] + fd[0] * pf.chi[0] + fd[1] * pf.chi[1]);
    }
    if let Some(tb) = &g.traction {
        for q in 0..tb.len() {
            let gd = loads.traction.rate(tb.points[q], t);
            p -= tb.weights[q] * (gd[0] * tb.value(q, &chi[..n]) + gd[1] * tb.value(q, &chi[n..]));
        }
    }
    p
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discrete energy balances along a trajectory. α = 0 is the
/// mechano-magneto-chemical balance, in which the adiabatic terms act as a
/// sink; α = 1 adds the enthalpy and is closed by the boundary heat flux.
/// Load work uses the time derivatives of the loads, so no ∇χ̇ enters.
pub fn energy_audit(problem: &DynamicProblem, trajectory: &Trajectory) -> Result<Audit> {
    let g = &problem.galerkin;
    let loads = &g.loads;
    let states = &trajectory.states;
    let mut reports = Vec::with_capacity(states.len());
    let first = base_report(g, &states[0])?;
    let (e0_0, total_0) = (first.mechanical(), first.total());
    let scale = total_0.abs().max(1e-300);
    reports.push(first);
    let (mut acc0, mut acc1) = (0.0, 0.0);
    let (mut max0, mut max1, mut max_defect) = (0.0f64, 0.0f64, 0.0f64);
    for w in states.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let dt = next.t - prev.t;
        let mut rep = base_report(g, next)?;
        let mobility = transport_tensors(g, &next.chi, &prev.m, &prev.zeta, &prev.theta, false)?;
        let sources: Vec<HeatSource> = step_sources(problem, prev, next, &mobility);
        let integrate = |f: &dyn Fn(&HeatSource) -> f64| -> f64 {
            let v: Vec<f64> = sources.iter().map(f).collect();
            dt * g.quad.integrate(&v)
        };
        rep.dissipation_m = integrate(&|s| s.viscous_m);
        rep.dissipation_zeta = integrate(&|s| s.viscous_zeta);
        rep.dissipation_mu = integrate(&|s| s.diffusive);
        rep.dissipation_reg = integrate(&|s| s.dissipation_reg());
        rep.adiabatic = integrate(&|s| s.adiabatic);

        let t_mid = prev.t + 0.5 * dt;
        let chi_mid: Vec<f64> = prev.chi.iter().zip(&next.chi).map(|(a, b)| 0.5 * (a + b)).collect();
        rep.load_work = dt * load_power(g, &chi_mid, &prev.m, &prev.zeta, t_mid);
        let (bm, bmu) = transfer_terms(g, loads.mass_transfer, &|x| loads.chemical_potential.value(x, next.t));
        let bmu_mu = &bm * nalgebra::DVector::from_column_slice(&next.mu);
        rep.chemical_flux = dt * (dot(bmu.as_slice(), &next.mu) - dot(bmu_mu.as_slice(), &next.mu));
        let (bk, bth) =
            transfer_terms(g, loads.heat_transfer, &|x| problem.regularize(loads.temperature.value(x, next.t)));
        let bk_theta = &bk * nalgebra::DVector::from_column_slice(&next.theta);
        rep.heat_flux = dt * (bth.sum() - bk_theta.sum());

        let work0 = rep.load_work + rep.chemical_flux;
        acc0 += rep.dissipation() + rep.adiabatic - work0;
        acc1 += work0 + rep.heat_flux - (rep.dissipation() - rep.dissipation_reg);
        let r0 = rep.mechanical() - e0_0 + acc0;
        let r1 = rep.total() - total_0 - acc1;
        rep.residual_alpha0 = r0.abs() / scale;
        rep.residual_alpha1 = r1.abs() / scale;
        let prev_thermal = reports.last().map(|r: &EnergyReport| r.thermal).unwrap_or(0.0);
        rep.enthalpy_defect = rep.thermal - prev_thermal - rep.dissipation_reg - rep.adiabatic - rep.heat_flux;
        max0 = max0.max(rep.residual_alpha0);
        max1 = max1.max(rep.residual_alpha1);
        max_defect = max_defect.max(rep.enthalpy_defect.abs());
        reports.push(rep);
    }
    Ok(Audit { reports, residual_alpha0: max0, residual_alpha1: max1, enthalpy_defect: max_defect, scale })
}

/// Monitored norms of one state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MonitorRow {
    pub t: f64,
    /// Kinetic plus mechanical potential energy.
    pub energy: f64,
    pub exchange: f64,
    pub interfacial: f64,
    /// ‖Δζ‖ and ‖Δm‖ in L².
    pub laplace_zeta: f64,
    pub laplace_m: f64,
    /// ‖Cof∇χ ∇μ/√det∇χ‖ and ‖Cof∇χ ∇θ/√det∇χ‖ in L².
    pub flux_mu: f64,
    pub flux_theta: f64,
    pub theta_l1: f64,
    /// ‖∇θ‖ in L^r.
    pub grad_theta_lr: f64,
    /// Accumulated ∫∫ τ₁|ṁ|² + τ₂ζ̇².
    pub viscous: f64,
    pub j_min: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Monitor {
    pub rows: Vec<MonitorRow>,
    /// Running suprema of every column except t and j_min.
    pub sup: Vec<MonitorRow>,
    /// Smallest determinant over the trajectory.
    pub eta_run: f64,
    /// Bound inputs at the state attaining η_run.
    pub bound: Option<BoundInputs>,
}

fn monitor_row(g: &Galerkin, st: &StateVector, r: f64) -> Result<MonitorRow> {
    let n = g.n();
    let tq = &g.quad;
    let it = g.mechanical_items(&st.chi, &st.m, &st.zeta, st.t)?;
    let mut lz = vec![0.0; tq.len()];
    let mut lm = vec![0.0; tq.len()];
    let mut fmu = vec![0.0; tq.len()];
    let mut fth = vec![0.0; tq.len()];
    let mut l1 = vec![0.0; tq.len()];
    let mut lr = vec![0.0; tq.len()];
    for q in 0..tq.len() {
        let p = g.point(q, &st.chi, &st.m, &st.zeta);
        let lap = |c: &[f64]| {
            let h = tq.hessian(q, c);
            h[0] + h[2]
        };
        lz[q] = lap(&st.zeta).powi(2);
        lm[q] = lap(&st.m[..n]).powi(2) + lap(&st.m[n..]).powi(2);
        let j = p.f.determinant();
        // Cof F = J F⁻ᵀ, so Cof F v / √J = √J F⁻ᵀ v.
        let finv_t = p.f.try_inverse().map(|m| m.transpose()).unwrap_or_else(nalgebra::Matrix2::zeros);
        let weighted = |v: [f64; 2]| (finv_t * Vec2::new(v[0], v[1])).norm_squared() * j;
        fmu[q] = weighted(tq.gradient(q, &st.mu));
        let gt = tq.gradient(q, &st.theta);
        fth[q] = weighted(gt);
        l1[q] = tq.value(q, &st.theta).abs();
        lr[q] = (gt[0] * gt[0] + gt[1] * gt[1]).sqrt().powf(r);
    }
    Ok(MonitorRow {
        t: st.t,
        energy: kinetic(g, &st.v) + it.potential(),
        exchange: it.exchange,
        interfacial: it.interfacial,
        laplace_zeta: tq.integrate(&lz).sqrt(),
        laplace_m: tq.integrate(&lm).sqrt(),
        flux_mu: tq.integrate(&fmu).sqrt(),
        flux_theta: tq.integrate(&fth).sqrt(),
        theta_l1: tq.integrate(&l1),
        grad_theta_lr: tq.integrate(&lr).powf(1.0 / r),
        viscous: 0.0,
        j_min: g.min_det(&st.chi).0,
    })
}

/// Norms bounded by the a-priori estimates, with running suprema.
pub fn estimate_monitor(problem: &DynamicProblem, trajectory: &Trajectory) -> Result<Monitor> {
    let g = &problem.galerkin;
    let model = &g.model;
    let r = problem.options.flux_exponent;
    let mut rows: Vec<MonitorRow> = Vec::with_capacity(trajectory.states.len());
    let mut viscous = 0.0;
    for (k, st) in trajectory.states.iter().enumerate() {
        let mut row = monitor_row(g, st, r)?;
        if k > 0 {
            let dt = st.t - trajectory.states[k - 1].t;
            let n = g.n();
            let vals: Vec<f64> = (0..g.quad.len())
                .map(|q| {
                    let md0 = g.quad.value(q, &st.m_dot[..n]);
                    let md1 = g.quad.value(q, &st.m_dot[n..]);
                    let zd = g.quad.value(q, &st.zeta_dot);
                    model.tau1 * (md0 * md0 + md1 * md1) + model.tau2 * zd * zd
                })
                .collect();
            viscous += dt * g.quad.integrate(&vals);
        }
        row.viscous = viscous;
        rows.push(row);
    }
    let mut sup = Vec::with_capacity(rows.len());
    let mut cur = MonitorRow { j_min: f64::INFINITY, ..MonitorRow::default() };
    let mut arg = 0;
    for (k, row) in rows.iter().enumerate() {
        cur.t = row.t;
        cur.energy = cur.energy.max(row.energy);
        cur.exchange = cur.exchange.max(row.exchange);
        cur.interfacial = cur.interfacial.max(row.interfacial);
        cur.laplace_zeta = cur.laplace_zeta.max(row.laplace_zeta);
        cur.laplace_m = cur.laplace_m.max(row.laplace_m);
        cur.flux_mu = cur.flux_mu.max(row.flux_mu);
        cur.flux_theta = cur.flux_theta.max(row.flux_theta);
        cur.theta_l1 = cur.theta_l1.max(row.theta_l1);
        cur.grad_theta_lr = cur.grad_theta_lr.max(row.grad_theta_lr);
        cur.viscous = cur.viscous.max(row.viscous);
        if row.j_min < cur.j_min {
            cur.j_min = row.j_min;
            arg = k;
        }
        sup.push(cur);
    }
    let eta_run = cur.j_min;
    let bound = trajectory.states.get(arg).and_then(|st| {
        DiscreteField::new(g.space.clone(), st.chi.clone(), 2)
            .ok()
            .map(|f| estimate_bound_inputs(&f, model.exponents.q_growth, g.kernel.gamma))
    });
    Ok(Monitor { rows, sup, eta_run, bound })
}

/// Smallest temperature over all quadrature points and states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemperatureCheck {
    pub theta_min: f64,
    pub location: [f64; 2],
    pub time: f64,
}

impl TemperatureCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.theta_min >= -tol
    }
}

pub fn nonneg_temperature_check(problem: &DynamicProblem, trajectory: &Trajectory) -> TemperatureCheck {
    let g = &problem.galerkin;
    let mut out = TemperatureCheck { theta_min: f64::INFINITY, location: [f64::NAN; 2], time: 0.0 };
    for st in &trajectory.states {
        for (q, v) in g.values(&st.theta).into_iter().enumerate() {
            if v < out.theta_min {
                out = TemperatureCheck { theta_min: v, location: g.quad.points[q], time: st.t };
            }
        }
    }
    out
}
