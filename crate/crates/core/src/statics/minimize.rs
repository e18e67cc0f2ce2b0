use std::collections::VecDeque;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix2, Vector2};
use serde::Serialize;

use super::energy::{StaticEnergyReport, StaticProblem, StaticState};
use crate::constitutive::{thermal_closure, Mat2, Vec2};
use crate::error::{Error, Result};
use crate::magnetostatics::check_admissible;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub con_zeta: f64,
    pub con_s: f64,
    pub gap: f64,
    pub j_min: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StaticResult {
    pub state: StaticState,
    pub report: StaticEnergyReport,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    pub iterations: usize,
    /// Multiplier of ∫ζ = Z_tot.
    pub chemical_potential: f64,
    /// Multiplier of ∫s = S_tot.
    pub temperature: f64,
    /// Smallest det ∇χ over all accepted iterates.
    pub eta_run: f64,
    pub termination: String,
}

/// Block-diagonal preconditioner on the free coefficients.
struct Preconditioner {
    blocks: Vec<(usize, usize, Cholesky<f64, Dyn>)>,
}

impl Preconditioner {
    fn apply(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; g.len()];
        for (start, len, ch) in &self.blocks {
            let x = ch.solve(&DVector::from_column_slice(&g[*start..start + len]));
            out[*start..start + len].copy_from_slice(x.as_slice());
        }
        out
    }
}

struct Reduced {
    free: Vec<usize>,
    full: Vec<f64>,
}

impl Reduced {
    fn gather(&self, v: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| v[i]).collect()
    }

    fn scatter(&self, u: &[f64]) -> Vec<f64> {
        let mut v = self.full.clone();
        for (k, &i) in self.free.iter().enumerate() {
            v[i] = u[k];
        }
        v
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    crate::linalg::dot(a, b)
}

fn build_preconditioner(problem: &StaticProblem, free: &[usize], theta_ref: f64) -> Result<Preconditioner> {
    let g = &problem.galerkin;
    let n = g.n();
    let model = &g.model;
    let zr = model.zeta_ref;
    let tan = model.stress_tangent(&Mat2::identity(), &Vec2::zeros(), zr)?;
    let c_chi = (0..4).map(|i| tan[(i, i)]).sum::<f64>() / 4.0;
    let h = model.hess_mz(&Mat2::identity(), &Vec2::zeros(), zr, theta_ref);
    let h_m = (0.5 * (h[(0, 0)] + h[(1, 1)])).max(1e-3);
    let h_z = h[(2, 2)].max(1e-3);
    let th = thermal_closure(model, &Vec2::zeros(), zr, theta_ref);
    let h_s = (theta_ref.max(1e-3) / th.cv.max(1e-12)).max(1e-6);
    let k = &g.stiffness;
    let mm = &g.mass;
    let mut blocks = Vec::new();
    let mut start = 0;
    for comp in 0..6 {
        let rows: Vec<usize> = free.iter().filter(|&&i| i / n == comp).map(|&i| i % n).collect();
        let len = rows.len();
        let mut a = DMatrix::zeros(len, len);
        for (p, &i) in rows.iter().enumerate() {
            for (q, &j) in rows.iter().enumerate() {
                a[(p, q)] = match comp {
                    0 | 1 => c_chi * (k[(i, j)] + 1e-3 * mm[(i, j)]) + g.hyper[(i, j)],
                    2 | 3 => model.kappa1 * k[(i, j)] + h_m * mm[(i, j)],
                    4 => model.kappa2 * k[(i, j)] + h_z * mm[(i, j)],
                    _ => h_s * mm[(i, j)],
                };
            }
        }
        let ch = a
            .cholesky()
            .ok_or_else(|| Error::SolverDivergence("preconditioner block is not positive definite".into()))?;
        blocks.push((start, len, ch));
        start += len;
    }
    Ok(Preconditioner { blocks })
}

struct Memory {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    cap: usize,
}

impl Memory {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy <= 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            return;
        }
        if self.pairs.len() == self.cap {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion with H₀ = γ P⁻¹.
    fn apply(&self, p: &Preconditioner, v: &[f64]) -> Vec<f64> {
        let mut q = v.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let mut r = p.apply(&q);
        if let Some((s, y, _)) = self.pairs.back() {
            let py = p.apply(y);
            let gamma = dot(s, y) / dot(y, &py);
            for ri in r.iter_mut() {
                *ri *= gamma;
            }
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &r);
            for (ri, si) in r.iter_mut().zip(s) {
                *ri += (a - b) * si;
            }
        }
        r
    }
}

/// Solves (CᵀHC) λ = CᵀH g for the two constraint normals.
fn multipliers(hg: &[f64], hc: &[Vec<f64>; 2], c: &[Vec<f64>; 2]) -> Vector2<f64> {
    let m = Matrix2::new(dot(&c[0], &hc[0]), dot(&c[0], &hc[1]), dot(&c[1], &hc[0]), dot(&c[1], &hc[1]));
    let r = Vector2::new(dot(&c[0], hg), dot(&c[1], hg));
    m.try_inverse().map(|mi| mi * r).unwrap_or_else(Vector2::zeros)
}

/// Projected direction −(H g − H C λ), tangent to the constraints.
fn projected(h: impl Fn(&[f64]) -> Vec<f64>, g: &[f64], c: &[Vec<f64>; 2]) -> (Vec<f64>, Vector2<f64>) {
    let hg = h(g);
    let hc = [h(&c[0]), h(&c[1])];
    let lam = multipliers(&hg, &hc, c);
    let d = (0..g.len()).map(|i| -(hg[i] - lam[0] * hc[0][i] - lam[1] * hc[1][i])).collect();
    (d, lam)
}

/// Minimizes Ũ under the mass, entropy, Dirichlet and Ciarlet–Nečas
/// constraints with a projected, preconditioned L-BFGS iteration.
pub fn minimize(problem: &StaticProblem, initial: &StaticState) -> Result<StaticResult> {
    let g = &problem.galerkin;
    let n = g.n();
    let opts = problem.options;
    if initial.chi.len() != 2 * n || initial.m.len() != 2 * n || initial.zeta.len() != n || initial.s.len() != n {
        return Err(Error::InvalidInput("initial state does not match the basis".into()));
    }
    g.check_determinant(&initial.chi)?;
    let clamped = problem.clamped();
    for &i in &clamped {
        if (initial.chi[i] - problem.chi_d[i]).abs() > 1e-10 {
            return Err(Error::InvalidInput("initial deformation violates the Dirichlet data".into()));
        }
    }
    let area = g.space.mesh.measure();
    let mut st = initial.clone();
    let (rz, rs) = problem.constraint_residuals(&st);
    st.zeta.iter_mut().for_each(|v| *v -= rz / area);
    st.s.iter_mut().for_each(|v| *v -= rs / area);
    if opts.magnetostatics {
        check_admissible(&problem.chi_field(&st.chi)?, &problem.gap_options())?;
    }

    let mut is_free = vec![true; 6 * n];
    for &i in &clamped {
        is_free[i] = false;
    }
    let free: Vec<usize> = (0..6 * n).filter(|&i| is_free[i]).collect();
    let red = Reduced { free, full: st.to_vec() };
    let integrals = g.integrals();
    let mut cz = vec![0.0; 6 * n];
    let mut cs = vec![0.0; 6 * n];
    cz[4 * n..5 * n].copy_from_slice(&integrals);
    cs[5 * n..].copy_from_slice(&integrals);
    let cons = [red.gather(&cz), red.gather(&cs)];

    let ev = problem.evaluate(&st, true)?;
    let theta_mean = g.quad.integrate(&ev.theta) / area;
    let pre = build_preconditioner(problem, &red.free, theta_mean)?;
    let h_min = g.space.mesh.h(0).min(g.space.mesh.h(1));
    let n_chi_free = red.free.iter().filter(|&&i| i < 2 * n).count();

    let mut u = red.gather(&st.to_vec());
    let mut energy = ev.report.total;
    let mut report = ev.report;
    let mut grad = red.gather(&ev.gradient.expect("gradient"));
    let mut gap = if opts.magnetostatics { problem.gap(&st.chi)?.gap } else { 0.0 };
    let mut eta_run = report.min_det;
    let mut mem = Memory { pairs: VecDeque::new(), cap: opts.memory.max(1) };
    let mut trace = Vec::new();
    let mut converged = false;
    let mut termination = String::from("iteration cap");
    let mut lam: Vector2<f64>;
    let mut iterations = 0;
    let mut step = 0.0;

    loop {
        let (r, l) = projected(|v| pre.apply(v), &grad, &cons);
        lam = l;
        // r = −P⁻¹(g − Cλ): the dual norm of the projected gradient
        let stat = (-dot(&r, &grad) / area).max(0.0).sqrt();
        let (cz_res, cs_res) = problem.constraint_residuals(&st);
        trace.push(TraceRow {
            iteration: iterations,
            energy,
            grad_norm: stat,
            con_zeta: cz_res,
            con_s: cs_res,
            gap,
            j_min: report.min_det,
            step,
        });
        if stat <= opts.tol_grad {
            converged = true;
            termination = "stationary".into();
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }

        let mut accepted = None;
        for attempt in 0..2 {
            let (mut d, _) = projected(|v| mem.apply(&pre, v), &grad, &cons);
            let mut slope = dot(&grad, &d);
            if slope >= 0.0 || attempt == 1 {
                mem.pairs.clear();
                d = r.clone();
                slope = dot(&grad, &d);
            }
            if slope >= 0.0 {
                break;
            }
            let dmax = d[..n_chi_free].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let mut alpha: f64 = 1.0;
            if dmax > 0.0 {
                alpha = alpha.min(opts.max_displacement * h_min / dmax);
            }
            while alpha > 1e-14 {
                let trial_u: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                let trial = StaticState::from_vec(&red.scatter(&trial_u), n);
                if let Ok(ev) = problem.evaluate(&trial, true) {
                    if ev.report.total <= energy + opts.armijo * alpha * slope {
                        let tgap = if opts.magnetostatics { problem.gap(&trial.chi)?.gap } else { 0.0 };
                        if tgap <= opts.tol_cn * area {
                            accepted = Some((trial_u, trial, ev, tgap, alpha));
                            break;
                        }
                    }
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((nu, nst, ev, ngap, alpha)) = accepted else {
            if stat <= 1e3 * opts.tol_grad {
                termination = "line search stalled near stationarity".into();
                break;
            }
            return Err(Error::LineSearchFailure(format!(
                "no admissible step at iteration {iterations}, stationarity {stat:.3e}"
            )));
        };
        let ngrad = red.gather(&ev.gradient.expect("gradient"));
        let s: Vec<f64> = nu.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = ngrad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        mem.push(s, y);
        u = nu;
        st = nst;
        grad = ngrad;
        energy = ev.report.total;
        report = ev.report;
        gap = ngap;
        eta_run = eta_run.min(report.min_det);
        step = alpha;
        iterations += 1;
    }

    Ok(StaticResult {
        state: st,
        report,
        trace,
        converged,
        iterations,
        chemical_potential: lam[0],
        temperature: lam[1],
        eta_run,
        termination,
    })
}
