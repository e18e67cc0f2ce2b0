use nalgebra::{DMatrix, DVector};

use super::problem::{DynamicProblem, StateVector};
use super::residuals::{step_sources, transfer_terms, transport_tensors, weighted_stiffness, ChemicalSystem};
use crate::error::{Error, Result};
use crate::galerkin::Galerkin;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn lu_solve(j: DMatrix<f64>, r: &[f64]) -> Result<Vec<f64>> {
    j.lu()
        .solve(&DVector::from_column_slice(r))
        .map(|d| d.iter().map(|x| -x).collect())
        .ok_or_else(|| Error::SolverDivergence("singular Newton matrix".into()))
}

/// Block-diagonal copy of a scalar matrix for each of `k` components.
fn blocks(m: &DMatrix<f64>, k: usize, scale: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(k * n, k * n);
    for c in 0..k {
        out.view_mut((c * n, c * n), (n, n)).copy_from(&(m * scale));
    }
    out
}

/// Newton with residual backtracking; converged when the residual or a
/// full step falls below `tol`. `eval` returns the residual, or an
/// error for an inadmissible iterate; `jac` the Jacobian.
fn newton<R, J>(x0: Vec<f64>, tol: f64, max_iter: usize, what: &str, eval: R, jac: J) -> Result<Vec<f64>>
where
    R: Fn(&[f64]) -> Result<Vec<f64>>,
    J: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let mut x = x0;
    let mut r = eval(&x)?;
    for _ in 0..max_iter {
        let rn = inf_norm(&r);
        if rn <= tol {
            return Ok(x);
        }
        let d = lu_solve(jac(&x)?, &r)?;
        // a full step below round-off of the iterate counts as converged
        let small = inf_norm(&d) <= tol * (1.0 + inf_norm(&x));
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            if let Ok(rt) = eval(&trial) {
                if small && alpha == 1.0 {
                    return Ok(trial);
                }
                if inf_norm(&rt) < rn || alpha < 1e-3 {
                    x = trial;
                    r = rt;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-6 {
                return Err(Error::SolverDivergence(format!("{what}: no admissible Newton step")));
            }
        }
    }
    if inf_norm(&r) <= tol {
        Ok(x)
    } else {
        Err(Error::SolverDivergence(format!(
            "{what}: Newton residual {:.3e} after {max_iter} iterations",
            inf_norm(&r)
        )))
    }
}

fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

/// θ-dependent part of the initial state: θ₀ regularized pointwise and
/// projected, μ from the holonomic constraint.
pub fn initial_state(problem: &DynamicProblem) -> Result<StateVector> {
    let g = &problem.galerkin;
    let n = g.n();
    let init = &problem.initial;
    let raw = g.values(&init.theta);
    let reg: Vec<f64> = raw.iter().map(|&t| problem.regularize(t.max(0.0))).collect();
    let b = crate::discretization::assembly::load_vector(n, &g.quad, &reg);
    let theta: Vec<f64> = crate::linalg::solve_dense(&g.mass, &b)?.iter().copied().collect();
    let mut st = StateVector {
        t: 0.0,
        chi: init.chi.clone(),
        v: init.v.clone(),
        m: init.m.clone(),
        zeta: init.zeta.clone(),
        mu: vec![0.0; n],
        theta,
        m_dot: vec![0.0; 2 * n],
        zeta_dot: vec![0.0; n],
        mu_residual: 0.0,
    };
    let (mu, res) = super::residuals::solve_chemical_potential(problem, &st)?;
    st.mu = mu;
    st.mu_residual = res;
    Ok(st)
}

/// One staggered step without retries.
pub fn try_step(problem: &DynamicProblem, prev: &StateVector, dt: f64) -> Result<StateVector> {
    let g: &Galerkin = &problem.galerkin;
    let n = g.n();
    let model = &g.model;
    let opts = &problem.options;
    let (t0, t1) = (prev.t, prev.t + dt);
    let th = t0 + 0.5 * dt;

    // (1) momentum, implicit midpoint
    let inertia = blocks(&g.mass, 2, 2.0 * model.rho / (dt * dt));
    let guess: Vec<f64> = prev.chi.iter().zip(&prev.v).map(|(c, v)| c + dt * v).collect();
    let momentum = |chi: &[f64]| -> Result<Vec<f64>> {
        let mid = midpoint(&prev.chi, chi);
        g.check_determinant(&mid)?;
        let f = g.grad_chi(&mid, &prev.m, &prev.zeta, th)?;
        let dx: Vec<f64> = (0..2 * n).map(|i| chi[i] - prev.chi[i] - dt * prev.v[i]).collect();
        let in_dx = &inertia * DVector::from_column_slice(&dx);
        Ok((0..2 * n).map(|i| in_dx[i] + f[i]).collect())
    };
    let momentum_jac = |chi: &[f64]| -> Result<DMatrix<f64>> {
        let mid = midpoint(&prev.chi, chi);
        Ok(&inertia + g.hess_chi(&mid, &prev.m, &prev.zeta, th)? * 0.5)
    };
    let chi1 = newton(guess, opts.newton_tol, opts.newton_max, "momentum", momentum, momentum_jac)?;
    g.check_determinant(&chi1)?;
    let v1: Vec<f64> = (0..2 * n).map(|i| 2.0 * (chi1[i] - prev.chi[i]) / dt - prev.v[i]).collect();

    // (2) magnetization and Cahn–Hilliard pair, implicit Euler with μ eliminated
    let mobility = transport_tensors(g, &chi1, &prev.m, &prev.zeta, &prev.theta, false)?;
    let chem = ChemicalSystem::new(problem, mobility, t1)?;
    let theta0 = g.values(&prev.theta);
    let split = |u: &[f64]| (u[..2 * n].to_vec(), u[2 * n..].to_vec());
    let mz_residual = |u: &[f64]| -> Result<Vec<f64>> {
        let (m, z) = split(u);
        let (gm, gz) = g.grad_mz(&chi1, &m, &z, &theta0, t1);
        let (mu, _) = chem.solve(problem, &gz);
        let mut r = vec![0.0; 3 * n];
        let dm = DVector::from_iterator(2 * n, (0..2 * n).map(|i| (m[i] - prev.m[i]) / dt));
        let mdm = blocks(&g.mass, 2, model.tau1) * dm;
        for i in 0..2 * n {
            r[i] = mdm[i] + gm[i];
        }
        let dz = DVector::from_iterator(n, (0..n).map(|i| (z[i] - prev.zeta[i]) / dt));
        let rz = &g.mass * dz + &chem.a_mb * mu - &chem.b_gamma;
        r[2 * n..].copy_from_slice(rz.as_slice());
        Ok(r)
    };
    let mz_jac = |u: &[f64]| -> Result<DMatrix<f64>> {
        let (m, z) = split(u);
        let h = g.hess_mz(&chi1, &m, &z, &theta0);
        let mut j = DMatrix::zeros(3 * n, 3 * n);
        j.view_mut((0, 0), (2 * n, 3 * n)).copy_from(&h.view((0, 0), (2 * n, 3 * n)));
        for c in 0..2 {
            let mut b = j.view_mut((c * n, c * n), (n, n));
            b += &g.mass * (model.tau1 / dt);
        }
        let hz = h.view((2 * n, 0), (n, 3 * n)).clone_owned();
        let sinv_hz = chem.s_chol.solve(&hz);
        let lower = &chem.a_mb * sinv_hz;
        j.view_mut((2 * n, 0), (n, 3 * n)).copy_from(&lower);
        let mut b = j.view_mut((2 * n, 2 * n), (n, n));
        b += &g.mass / dt;
        Ok(j)
    };
    let mut u0 = prev.m.clone();
    u0.extend_from_slice(&prev.zeta);
    let u1 = newton(u0, opts.newton_tol, opts.newton_max, "magnetization/diffusion", mz_residual, mz_jac)?;
    let (m1, z1) = split(&u1);
    let (_, gz) = g.grad_mz(&chi1, &m1, &z1, &theta0, t1);
    let (mu1, mu_res) = chem.solve(problem, &gz);

    let mut next = StateVector {
        t: t1,
        chi: chi1,
        v: v1,
        m_dot: (0..2 * n).map(|i| (m1[i] - prev.m[i]) / dt).collect(),
        zeta_dot: (0..n).map(|i| (z1[i] - prev.zeta[i]) / dt).collect(),
        m: m1,
        zeta: z1,
        mu: mu1.iter().copied().collect(),
        theta: prev.theta.clone(),
        mu_residual: mu_res,
    };

    // (3) heat, implicit Euler in enthalpy form with θ as unknown
    let sources = step_sources(problem, prev, &next, &chem.mobility);
    let src: Vec<f64> = sources.iter().map(|s| s.total()).collect();
    let cond = transport_tensors(g, &next.chi, &next.m, &next.zeta, &prev.theta, true)?;
    let a_k = weighted_stiffness(g, &cond);
    let loads = &g.loads;
    let (bk, b_theta) = transfer_terms(g, loads.heat_transfer, &|x| problem.regularize(loads.temperature.value(x, t1)));
    let lin = a_k + bk;
    let pts1 = g.points(&next.chi, &next.m, &next.zeta);
    let pts0 = g.points(&prev.chi, &prev.m, &prev.zeta);
    let w0: Vec<f64> = pts0.iter().zip(&theta0).map(|(p, &t)| model.e_th(&p.m, p.z, t)).collect();
    let heat_residual = |theta: &[f64]| -> Result<Vec<f64>> {
        let tq = g.values(theta);
        let vals: Vec<f64> =
            (0..tq.len()).map(|q| (model.e_th(&pts1[q].m, pts1[q].z, tq[q]) - w0[q]) / dt - src[q]).collect();
        let b = crate::discretization::assembly::load_vector(n, &g.quad, &vals);
        let r = b + &lin * DVector::from_column_slice(theta) - &b_theta;
        Ok(r.iter().copied().collect())
    };
    let heat_jac = |theta: &[f64]| -> Result<DMatrix<f64>> {
        let tq = g.values(theta);
        let cv: Vec<f64> = (0..tq.len()).map(|q| model.heat_capacity(&pts1[q].m, pts1[q].z, tq[q]) / dt).collect();
        let tab = &g.quad;
        let m = crate::discretization::assembly::assemble_dense(n, tab, |q, a, b| cv[q] * tab.val[a] * tab.val[b]);
        Ok(m + &lin)
    };
    next.theta = newton(prev.theta.clone(), opts.newton_tol, opts.newton_max, "heat", heat_residual, heat_jac)?;
    Ok(next)
}

/// One step of size `dt`; on failure (J ≤ 0 or a failed solve) the step is
/// retried as two half steps, down to the configured floor. Every accepted
/// state is appended to `out`.
pub fn step_into(problem: &DynamicProblem, prev: &StateVector, dt: f64, out: &mut Vec<StateVector>) -> Result<()> {
    let floor = problem.dt * problem.options.dt_floor;
    match try_step(problem, prev, dt) {
        Ok(s) => {
            out.push(s);
            Ok(())
        }
        Err(Error::DegenerateDeformation { .. } | Error::SolverDivergence(_)) => {
            if 0.5 * dt < floor * (1.0 - 1e-12) {
                return Err(Error::StepFloorReached { t: prev.t, dt_floor: floor });
            }
            step_into(problem, prev, 0.5 * dt, out)?;
            let mid = out.last().expect("accepted state").clone();
            step_into(problem, &mid, 0.5 * dt, out)
        }
        Err(e) => Err(e),
    }
}

/// Advances by `dt`, returning the final accepted state.
pub fn step(problem: &DynamicProblem, prev: &StateVector, dt: f64) -> Result<StateVector> {
    let mut out = Vec::new();
    step_into(problem, prev, dt, &mut out)?;
    Ok(out.pop().expect("accepted state"))
}

/// Every accepted state, starting with the initial one; retried steps
/// contribute their intermediate states.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<StateVector>,
}

pub fn simulate(problem: &DynamicProblem) -> Result<Trajectory> {
    simulate_with(problem, |_| Ok(()))
}

/// Runs the problem, calling `observe` on every accepted state.
pub fn simulate_with<F>(problem: &DynamicProblem, mut observe: F) -> Result<Trajectory>
where
    F: FnMut(&StateVector) -> Result<()>,
{
    let st = initial_state(problem)?;
    observe(&st)?;
    let mut states = vec![st];
    for k in 0..problem.n_steps() {
        let t_next = ((k + 1) as f64 * problem.dt).min(problem.t_end);
        let prev = states.last().expect("initial state").clone();
        let start = states.len();
        step_into(problem, &prev, t_next - prev.t, &mut states)?;
        states.last_mut().expect("accepted state").t = t_next;
        for s in &states[start..] {
            observe(s)?;
        }
    }
    Ok(Trajectory { states })
}
