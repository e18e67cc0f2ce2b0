use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use super::tensor::{cof, det_hessian, flat, Mat2, Vec2};
use crate::error::{Error, Result};

/// The part φ(F, m, ζ) of the mechanical free energy.
pub trait MechanicalEnergy: Send + Sync + Debug {
    fn value(&self, f: &Mat2, m: &Vec2, z: f64) -> f64;
    fn grad_f(&self, f: &Mat2, m: &Vec2, z: f64) -> Mat2;
    fn grad_m(&self, f: &Mat2, m: &Vec2, z: f64) -> Vec2;
    fn grad_z(&self, f: &Mat2, m: &Vec2, z: f64) -> f64;
    /// ∂²φ/∂F², row-major flattening.
    fn hess_f(&self, f: &Mat2, m: &Vec2, z: f64) -> Matrix4<f64>;
    /// ∂²φ/∂(m, ζ)², ordered (m₁, m₂, ζ).
    fn hess_mz(&self, f: &Mat2, m: &Vec2, z: f64) -> Matrix3<f64>;
}

/// Convex volumetric energy ξ₀(J); +∞ for J ≤ 0.
pub trait VolumetricEnergy: Send + Sync + Debug {
    fn value(&self, j: f64) -> f64;
    fn d1(&self, j: f64) -> f64;
    fn d2(&self, j: f64) -> f64;
    /// Blow-up exponent q: ξ₀(J) ≥ ε/J^q.
    fn exponent(&self) -> f64;
    /// The constant ε of the blow-up bound.
    fn blowup_coefficient(&self) -> f64;
}

/// The (m, ζ)-only part ξ₁ of the determinant term.
pub trait MagChemEnergy: Send + Sync + Debug {
    fn value(&self, m: &Vec2, z: f64) -> f64;
    fn grad(&self, m: &Vec2, z: f64) -> Vector3<f64>;
    fn hess(&self, m: &Vec2, z: f64) -> Matrix3<f64>;
}

/// Thermal free energy ψ_th(m, ζ, θ), defined for θ ≥ 0.
pub trait ThermalEnergy: Send + Sync + Debug {
    fn value(&self, m: &Vec2, z: f64, theta: f64) -> f64;
    fn d_theta(&self, m: &Vec2, z: f64, theta: f64) -> f64;
    fn d2_theta(&self, m: &Vec2, z: f64, theta: f64) -> f64;
    /// ∂_(m,ζ) ψ_th.
    fn grad_mz(&self, m: &Vec2, z: f64, theta: f64) -> Vector3<f64>;
    /// ∂²_(m,ζ)θ ψ_th.
    fn grad_mz_theta(&self, m: &Vec2, z: f64, theta: f64) -> Vector3<f64>;
    fn hess_mz(&self, m: &Vec2, z: f64, theta: f64) -> Matrix3<f64>;
    /// lim θ→0+ of ∂_θψ_th (may be +∞).
    fn slope_at_zero(&self, m: &Vec2, z: f64) -> f64;

    fn heat_capacity(&self, m: &Vec2, z: f64, theta: f64) -> f64 {
        if theta <= 0.0 {
            return self.heat_capacity(m, z, 1e-300);
        }
        -theta * self.d2_theta(m, z, theta)
    }

    /// ∂_(m,ζ) c_v; the default uses central differences.
    fn heat_capacity_grad(&self, m: &Vec2, z: f64, theta: f64) -> Vector3<f64> {
        let h = 1e-6;
        let mut g = Vector3::zeros();
        for k in 0..3 {
            let (mut mp, mut zp, mut mm, mut zm) = (*m, z, *m, z);
            if k < 2 {
                mp[k] += h;
                mm[k] -= h;
            } else {
                zp += h;
                zm -= h;
            }
            g[k] = (self.heat_capacity(&mp, zp, theta) - self.heat_capacity(&mm, zm, theta)) / (2.0 * h);
        }
        g
    }
}

/// Spatial mobility 𝗠 and conductivity 𝗞.
pub trait Transport: Send + Sync + Debug {
    fn mobility(&self, m: &Vec2, z: f64, theta: f64) -> Mat2;
    fn conductivity(&self, m: &Vec2, z: f64, theta: f64) -> Mat2;
}

/// Growth and coercivity exponents; stored as metadata and spot-checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub gamma: f64,
    pub q_growth: f64,
    pub delta: f64,
}

/// All constitutive ingredients of the model. Immutable once built.
#[derive(Debug, Clone)]
pub struct MaterialModel {
    pub name: String,
    pub rho: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub zeta_ref: f64,
    /// ψ at F = I, m = 0, ζ = ζ_ref, θ = 0.
    pub ground_energy: f64,
    pub exponents: Exponents,
    pub phi: Arc<dyn MechanicalEnergy>,
    pub xi0: Arc<dyn VolumetricEnergy>,
    pub xi1: Option<Arc<dyn MagChemEnergy>>,
    pub thermal: Arc<dyn ThermalEnergy>,
    pub transport: Arc<dyn Transport>,
}

fn degenerate(det: f64) -> Error {
    Error::DegenerateDeformation { det, location: "constitutive evaluation".into() }
}

impl MaterialModel {
    /// ψ_me = φ + ξ₀(det F) + ξ₁; +∞ when det F ≤ 0.
    pub fn psi_me(&self, f: &Mat2, m: &Vec2, z: f64) -> f64 {
        let j = f.determinant();
        if j <= 0.0 {
            return f64::INFINITY;
        }
        let xi1 = self.xi1.as_ref().map_or(0.0, |x| x.value(m, z));
        self.phi.value(f, m, z) + self.xi0.value(j) + xi1
    }

    /// ψ_th extended to θ < 0 by its tangent line at θ = 0.
    pub fn psi_th(&self, m: &Vec2, z: f64, theta: f64) -> f64 {
        if theta >= 0.0 {
            self.thermal.value(m, z, theta)
        } else {
            let s0 = self.thermal.slope_at_zero(m, z);
            if s0.is_infinite() {
                f64::NEG_INFINITY
            } else {
                self.thermal.value(m, z, 0.0) + theta * s0
            }
        }
    }

    /// ∂_F ψ_me.
    pub fn stress(&self, f: &Mat2, m: &Vec2, z: f64) -> Result<Mat2> {
        let j = f.determinant();
        if j <= 0.0 {
            return Err(degenerate(j));
        }
        Ok(self.phi.grad_f(f, m, z) + cof(f) * self.xi0.d1(j))
    }

    /// ∂²_F ψ_me (row-major flattening).
    pub fn stress_tangent(&self, f: &Mat2, m: &Vec2, z: f64) -> Result<Matrix4<f64>> {
        let j = f.determinant();
        if j <= 0.0 {
            return Err(degenerate(j));
        }
        let c = flat(&cof(f));
        Ok(self.phi.hess_f(f, m, z) + c * c.transpose() * self.xi0.d2(j) + det_hessian() * self.xi0.d1(j))
    }

    /// ∂_(m,ζ) ψ at temperature θ (mechanical and thermal parts).
    pub fn grad_mz(&self, f: &Mat2, m: &Vec2, z: f64, theta: f64) -> Vector3<f64> {
        let gm = self.phi.grad_m(f, m, z);
        let mut g = Vector3::new(gm[0], gm[1], self.phi.grad_z(f, m, z));
        if let Some(x) = &self.xi1 {
            g += x.grad(m, z);
        }
        g + self.thermal.grad_mz(m, z, theta.max(0.0))
    }

    /// ∂²_(m,ζ) ψ at temperature θ.
    pub fn hess_mz(&self, f: &Mat2, m: &Vec2, z: f64, theta: f64) -> Matrix3<f64> {
        let mut h = self.phi.hess_mz(f, m, z);
        if let Some(x) = &self.xi1 {
            h += x.hess(m, z);
        }
        h + self.thermal.hess_mz(m, z, theta.max(0.0))
    }

    pub fn mobility(&self, f: &Mat2, m: &Vec2, z: f64, theta: f64) -> Result<Mat2> {
        pull_back_tensor(f, &self.transport.mobility(m, z, theta))
    }

    pub fn conductivity(&self, f: &Mat2, m: &Vec2, z: f64, theta: f64) -> Result<Mat2> {
        pull_back_tensor(f, &self.transport.conductivity(m, z, theta))
    }

    /// Thermal internal energy e_th = ψ_th − θ ∂_θψ_th; extended linearly
    /// with slope c_v(0) below θ = 0 so Newton iterates stay defined.
    pub fn e_th(&self, m: &Vec2, z: f64, theta: f64) -> f64 {
        let t = &self.thermal;
        if theta > 0.0 {
            t.value(m, z, theta) - theta * t.d_theta(m, z, theta)
        } else {
            t.value(m, z, 0.0) + theta * t.heat_capacity(m, z, 0.0)
        }
    }

    pub fn heat_capacity(&self, m: &Vec2, z: f64, theta: f64) -> f64 {
        self.thermal.heat_capacity(m, z, theta.max(0.0))
    }
}

/// Bulk free energy ψ = φ + ξ + ψ_th; +∞ when det F ≤ 0.
pub fn eval_bulk_energy(model: &MaterialModel, f: &Mat2, m: &Vec2, z: f64, theta: f64) -> f64 {
    let me = model.psi_me(f, m, z);
    if me.is_infinite() {
        return me;
    }
    me + model.psi_th(m, z, theta)
}

/// First Piola–Kirchhoff stress ∂_F ψ_me.
pub fn eval_stress(model: &MaterialModel, f: &Mat2, m: &Vec2, z: f64) -> Result<Mat2> {
    model.stress(f, m, z)
}

/// Referential transport tensor (Cof F)ᵀ T (Cof F) / det F.
pub fn pull_back_tensor(f: &Mat2, t_sp: &Mat2) -> Result<Mat2> {
    let j = f.determinant();
    if j <= 0.0 {
        return Err(degenerate(j));
    }
    let c = cof(f);
    let t = c.transpose() * t_sp * c / j;
    Ok((t + t.transpose()) * 0.5)
}
