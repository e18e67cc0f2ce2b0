use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::Galerkin;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicOptions {
    pub newton_tol: f64,
    pub newton_max: usize,
    /// Smallest admissible step as a fraction of the nominal one.
    pub dt_floor: f64,
    /// Exponent r of the ∇θ monitor, 1 ≤ r < (d+2)/(d+1).
    pub flux_exponent: f64,
}

impl Default for DynamicOptions {
    fn default() -> Self {
        DynamicOptions { newton_tol: 1e-10, newton_max: 50, dt_floor: 1.0 / 1024.0, flux_exponent: 1.2 }
    }
}

/// Initial coefficients; θ is the raw (unregularized) temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub chi: Vec<f64>,
    pub v: Vec<f64>,
    pub m: Vec<f64>,
    pub zeta: Vec<f64>,
    pub theta: Vec<f64>,
}

pub type VectorFn<'a> = &'a dyn Fn([f64; 2]) -> [f64; 2];
pub type ScalarFn<'a> = &'a dyn Fn([f64; 2]) -> f64;

impl InitialData {
    /// L² projections of the given functions; the identity map and other
    /// spline-space members are reproduced exactly. θ₀ is sampled at the
    /// quadrature points, where it must be nonnegative.
    pub fn from_functions(
        g: &Galerkin,
        chi: VectorFn,
        v: VectorFn,
        m: VectorFn,
        zeta: ScalarFn,
        theta: ScalarFn,
    ) -> Result<InitialData> {
        for &x in &g.quad.points {
            let t = theta(x);
            if !(t >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "initial temperature theta0 must be nonnegative, found {t:.4e} at ({:.4}, {:.4})",
                    x[0], x[1]
                )));
            }
        }
        let vector = |f: VectorFn| -> Result<Vec<f64>> {
            let mut out = g.project(&|x| f(x)[0])?;
            out.extend(g.project(&|x| f(x)[1])?);
            Ok(out)
        };
        Ok(InitialData {
            chi: vector(chi)?,
            v: vector(v)?,
            m: vector(m)?,
            zeta: g.project(zeta)?,
            theta: g.project(theta)?,
        })
    }
}

/// The state after a step; rates are backward differences over the step
/// that produced it (zero for the initial state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub t: f64,
    pub chi: Vec<f64>,
    pub v: Vec<f64>,
    pub m: Vec<f64>,
    pub zeta: Vec<f64>,
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
    pub m_dot: Vec<f64>,
    pub zeta_dot: Vec<f64>,
    /// Residual of the chemical-potential system relative to its right side.
    pub mu_residual: f64,
}

pub struct DynamicProblem {
    pub galerkin: Galerkin,
    /// Regularization ε ≥ 0 of the heat sources and temperature data.
    pub eps: f64,
    pub t_end: f64,
    pub dt: f64,
    pub initial: InitialData,
    pub options: DynamicOptions,
}

impl DynamicProblem {
    pub fn new(
        galerkin: Galerkin,
        eps: f64,
        t_end: f64,
        dt: f64,
        initial: InitialData,
        options: DynamicOptions,
    ) -> Result<DynamicProblem> {
        let n = galerkin.n();
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidInput(format!("regularization eps must be nonnegative, got {eps}")));
        }
        if !(dt > 0.0) || !(t_end > 0.0) {
            return Err(Error::InvalidInput("t_end and dt must be positive".into()));
        }
        if initial.chi.len() != 2 * n
            || initial.v.len() != 2 * n
            || initial.m.len() != 2 * n
            || initial.zeta.len() != n
            || initial.theta.len() != n
        {
            return Err(Error::InvalidInput("initial data do not match the basis".into()));
        }
        let theta_min = galerkin.values(&initial.theta).into_iter().fold(f64::INFINITY, f64::min);
        if theta_min < -1e-12 {
            return Err(Error::InvalidInput(format!(
                "initial temperature theta0 must be nonnegative, min {theta_min:.4e}"
            )));
        }
        let model = &galerkin.model;
        if !(model.rho > 0.0) {
            return Err(Error::InvalidInput("density must be positive".into()));
        }
        galerkin.check_determinant(&initial.chi)?;
        let loads = &galerkin.loads;
        if let Some(tr) = &galerkin.transfer {
            let steps = (t_end / dt).ceil() as usize;
            for k in 0..=steps {
                let t = (k as f64 * dt).min(t_end);
                for &x in &tr.table.points {
                    let te = loads.temperature.value(x, t);
                    if te < 0.0 {
                        return Err(Error::InvalidInput(format!(
                            "external temperature theta_e must be nonnegative, found {te:.4e} at t = {t}"
                        )));
                    }
                }
            }
        }
        Ok(DynamicProblem { galerkin, eps, t_end, dt, initial, options })
    }

    pub fn n(&self) -> usize {
        self.galerkin.n()
    }

    /// θ/(1 + εθ), applied to θ₀ and θ_e.
    pub fn regularize(&self, theta: f64) -> f64 {
        theta / (1.0 + self.eps * theta)
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil() as usize
    }
}
