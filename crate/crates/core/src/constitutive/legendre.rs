//! Temperature ↔ entropy ↔ thermal internal energy conversions.

use serde::Serialize;

use super::model::MaterialModel;
use super::tensor::{Mat2, Vec2};
use crate::error::{Error, Result};

pub const TOL_NEWTON: f64 = 1e-12;
pub const THETA_MAX: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalState {
    pub theta: f64,
    /// Entropy density s = −∂_θψ.
    pub s: f64,
    /// Thermal internal energy w = e_th.
    pub w: f64,
    pub cv: f64,
}

pub fn thermal_closure(model: &MaterialModel, m: &Vec2, z: f64, theta: f64) -> ThermalState {
    let t = &model.thermal;
    let s = if theta > 0.0 { -t.d_theta(m, z, theta) } else { -t.slope_at_zero(m, z) };
    ThermalState { theta, s, w: model.e_th(m, z, theta), cv: model.heat_capacity(m, z, theta) }
}

/// Lowest entropy reachable at θ ≥ 0 (−∞ when ∂_θψ blows up at 0+).
pub fn entropy_floor(model: &MaterialModel, m: &Vec2, z: f64) -> f64 {
    -model.thermal.slope_at_zero(m, z)
}

/// Solves e_th(m, ζ, θ) = w for θ ≥ 0 by safeguarded Newton.
pub fn invert_enthalpy(model: &MaterialModel, m: &Vec2, z: f64, w: f64) -> Result<f64> {
    let w0 = model.e_th(m, z, 0.0);
    let scale = 1.0 + w.abs();
    if w < w0 - TOL_NEWTON * scale {
        return Err(Error::OutOfRange(format!("enthalpy {w:.6e} below e_th(θ=0) = {w0:.6e}")));
    }
    if w <= w0 {
        return Ok(0.0);
    }
    let f = |t: f64| model.e_th(m, z, t) - w;
    if f(THETA_MAX) < 0.0 {
        return Err(Error::OutOfRange(format!("enthalpy {w:.6e} needs θ above {THETA_MAX:e}")));
    }
    let (mut lo, mut hi) = (0.0, THETA_MAX);
    let mut t = (w - w0) / model.heat_capacity(m, z, 0.0).max(1e-300);
    if !(t > lo && t < hi) {
        t = 0.5 * (lo + hi);
    }
    for _ in 0..400 {
        let v = f(t);
        if v.abs() <= TOL_NEWTON * scale {
            return Ok(t);
        }
        if v > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let step = v / model.heat_capacity(m, z, t);
        let next = t - step;
        t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(t);
        }
    }
    Err(Error::SolverDivergence("enthalpy inversion did not converge".into()))
}

/// Temperature at which −∂_θψ_th = s. Returns 0 at the entropy floor.
/// The solve runs in u = ln θ, where the slope is c_v and stays bounded.
pub fn temperature_at_entropy(model: &MaterialModel, m: &Vec2, z: f64, s: f64) -> Result<f64> {
    let t = &model.thermal;
    let floor = entropy_floor(model, m, z);
    let scale = 1.0 + s.abs();
    if s < floor - TOL_NEWTON * scale {
        return Err(Error::OutOfRange(format!("entropy {s:.6e} below the floor {floor:.6e}")));
    }
    if s <= floor {
        return Ok(0.0);
    }
    let f = |u: f64| -t.d_theta(m, z, u.exp()) - s;
    let (mut lo, mut hi) = (-740.0f64, THETA_MAX.ln());
    if f(hi) < 0.0 {
        return Err(Error::OutOfRange(format!("entropy {s:.6e} needs θ above {THETA_MAX:e}")));
    }
    if f(lo) >= 0.0 {
        return Ok(0.0);
    }
    let mut u = 0.0f64.clamp(lo, hi);
    for _ in 0..400 {
        let v = f(u);
        if v.abs() <= TOL_NEWTON * scale {
            return Ok(u.exp());
        }
        if v > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let theta = u.exp();
        let slope = model.heat_capacity(m, z, theta);
        let next = u - v / slope;
        u = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            return Ok(u.exp());
        }
    }
    Err(Error::SolverDivergence("entropy inversion did not converge".into()))
}

/// Thermal part of the internal energy as a function of entropy,
/// ẽ_th(s) = sup_θ ψ_th(θ) + θ s; +∞ below the entropy floor.
pub fn legendre_thermal(model: &MaterialModel, m: &Vec2, z: f64, s: f64) -> f64 {
    match temperature_at_entropy(model, m, z, s) {
        Ok(theta) => model.psi_th(m, z, theta) + theta * s,
        Err(_) => f64::INFINITY,
    }
}

/// ẽ(F, m, ζ, s) = ψ_me(F, m, ζ) + ẽ_th(m, ζ, s).
pub fn legendre_internal_energy(model: &MaterialModel, f: &Mat2, m: &Vec2, z: f64, s: f64) -> f64 {
    let me = model.psi_me(f, m, z);
    if me.is_infinite() {
        return me;
    }
    me + legendre_thermal(model, m, z, s)
}
