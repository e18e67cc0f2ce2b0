use serde::Serialize;

use crate::discretization::DiscreteField;
use crate::error::{Error, Result};

/// sup over η ∈ (0, 1) of η − C_α M^{α/d} η^{pα/d}, with α = γ − d/2 + 1.
pub fn healey_kromer_eta(c_alpha: f64, m_int: f64, p: f64, gamma: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    let alpha = gamma - (df / 2.0 - 1.0);
    if !(alpha > 0.0) {
        return Err(Error::InvalidExponents(format!("gamma = {gamma} must exceed d/2 - 1 = {}", df / 2.0 - 1.0)));
    }
    let k = p * alpha / df;
    if !(k > 1.0) {
        return Err(Error::InvalidExponents(format!("p alpha / d = {k} must exceed 1")));
    }
    if !(c_alpha >= 0.0) || !(m_int > 0.0) {
        return Err(Error::InvalidExponents(format!("need C_alpha >= 0 and M > 0, got {c_alpha}, {m_int}")));
    }
    let a = c_alpha * m_int.powf(alpha / df);
    if a == 0.0 {
        return Ok(1.0);
    }
    let eta = (1.0 / (a * k)).powf(1.0 / (k - 1.0));
    if eta >= 1.0 {
        Ok(1.0 - a)
    } else {
        Ok(eta * (1.0 - 1.0 / k))
    }
}

/// max |f(x) − f(y)| / |x − y|^α over all point pairs.
pub fn holder_constant(points: &[[f64; 2]], values: &[f64], alpha: f64) -> f64 {
    let mut c: f64 = 0.0;
    for i in 0..points.len() {
        for j in 0..i {
            let r = ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt();
            if r > 0.0 {
                c = c.max((values[i] - values[j]).abs() / r.powf(alpha));
            }
        }
    }
    c
}

fn jacobians(chi: &DiscreteField) -> (Vec<[f64; 2]>, Vec<f64>, Vec<f64>) {
    let space = &chi.space;
    let quad = space.default_quadrature();
    let n = space.len();
    let (c1, c2) = (&chi.coeffs[..n], &chi.coeffs[n..2 * n]);
    let j = (0..quad.len())
        .map(|q| {
            let g1 = quad.gradient(q, c1);
            let g2 = quad.gradient(q, c2);
            g1[0] * g2[1] - g1[1] * g2[0]
        })
        .collect();
    (quad.points.clone(), quad.weights.clone(), j)
}

/// Minimum of det ∇χ over the quadrature points and where it occurs.
pub fn min_determinant_monitor(chi: &DiscreteField) -> (f64, [f64; 2]) {
    let (pts, _, j) = jacobians(chi);
    let mut best = (f64::INFINITY, [f64::NAN; 2]);
    for (p, v) in pts.iter().zip(&j) {
        if *v < best.0 {
            best = (*v, *p);
        }
    }
    best
}

/// Discrete inputs of the determinant bound for a deformation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub j_min: f64,
    pub location: [f64; 2],
    /// Hölder constant of J with exponent α.
    pub c_alpha: f64,
    /// ∫ J^{−q}.
    pub m_int: f64,
    /// η from the bound, when the exponents allow one.
    pub eta: Option<f64>,
}

pub fn estimate_bound_inputs(chi: &DiscreteField, q: f64, gamma: f64) -> BoundInputs {
    let d = chi.space.dim();
    let (pts, w, j) = jacobians(chi);
    let alpha = gamma - (d as f64 / 2.0 - 1.0);
    let (j_min, location) = min_determinant_monitor(chi);
    let c_alpha = holder_constant(&pts, &j, alpha);
    let m_int = if j_min > 0.0 { j.iter().zip(&w).map(|(v, wt)| wt * v.powf(-q)).sum() } else { f64::INFINITY };
    let eta = if m_int.is_finite() { healey_kromer_eta(c_alpha, m_int, q, gamma, d).ok() } else { None };
    BoundInputs { j_min, location, c_alpha, m_int, eta }
}
