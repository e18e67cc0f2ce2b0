//! The built-in material family.

use std::sync::Arc;

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use super::model::{Exponents, MaterialModel, MechanicalEnergy, ThermalEnergy, Transport, VolumetricEnergy};
use super::tensor::{Mat2, Vec2};
use crate::error::{Error, Result};

/// φ = (μ_L/4)|C−I|² + β(ζ−ζ_ref) tr(C−I) + α_c(ζ−ζ_ref)²
///   + (a₂/2)|m|² + (a₄/4)|m|⁴ + (k_u/2)(m·e_hard)², with C = FᵀF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StVenantMagnetic {
    pub mu_l: f64,
    pub beta: f64,
    pub alpha_c: f64,
    pub zeta_ref: f64,
    pub a2: f64,
    pub a4: f64,
    pub k_u: f64,
    pub hard_axis: Vec2,
}

impl StVenantMagnetic {
    fn strain(f: &Mat2) -> Mat2 {
        f.transpose() * f - Mat2::identity()
    }

    fn s2(&self, f: &Mat2, z: f64) -> Mat2 {
        Self::strain(f) * self.mu_l + Mat2::identity() * (2.0 * self.beta * (z - self.zeta_ref))
    }
}

impl MechanicalEnergy for StVenantMagnetic {
    fn value(&self, f: &Mat2, m: &Vec2, z: f64) -> f64 {
        let e = Self::strain(f);
        let dz = z - self.zeta_ref;
        let mm = m.norm_squared();
        let mh = m.dot(&self.hard_axis);
        0.25 * self.mu_l * e.norm_squared()
            + self.beta * dz * e.trace()
            + self.alpha_c * dz * dz
            + 0.5 * self.a2 * mm
            + 0.25 * self.a4 * mm * mm
            + 0.5 * self.k_u * mh * mh
    }

    fn grad_f(&self, f: &Mat2, _m: &Vec2, z: f64) -> Mat2 {
        f * self.s2(f, z)
    }

    fn grad_m(&self, _f: &Mat2, m: &Vec2, _z: f64) -> Vec2 {
        m * (self.a2 + self.a4 * m.norm_squared()) + self.hard_axis * (self.k_u * m.dot(&self.hard_axis))
    }

    fn grad_z(&self, f: &Mat2, _m: &Vec2, z: f64) -> f64 {
        self.beta * Self::strain(f).trace() + 2.0 * self.alpha_c * (z - self.zeta_ref)
    }

    fn hess_f(&self, f: &Mat2, _m: &Vec2, z: f64) -> Matrix4<f64> {
        // ∂P_ij/∂F_kl = δ_ik S_lj + μ_L (F_il F_kj + (F Fᵀ)_ik δ_jl)
        let s = self.s2(f, z);
        let ff = f * f.transpose();
        let mut h = Matrix4::zeros();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let mut v = self.mu_l * f[(i, l)] * f[(k, j)];
                        if i == k {
                            v += s[(l, j)];
                        }
                        if j == l {
                            v += self.mu_l * ff[(i, k)];
                        }
                        h[(2 * i + j, 2 * k + l)] = v;
                    }
                }
            }
        }
        h
    }

    fn hess_mz(&self, _f: &Mat2, m: &Vec2, _z: f64) -> Matrix3<f64> {
        let hm = Mat2::identity() * (self.a2 + self.a4 * m.norm_squared())
            + m * m.transpose() * (2.0 * self.a4)
            + self.hard_axis * self.hard_axis.transpose() * self.k_u;
        let mut h = Matrix3::zeros();
        h.fixed_view_mut::<2, 2>(0, 0).copy_from(&hm);
        h[(2, 2)] = 2.0 * self.alpha_c;
        h
    }
}

/// ξ₀(J) = ε_J (J^{−q} + q (J − 1)) + (J − 1)²: convex, blows up like
/// ε_J/J^q, and ξ₀′(1) = 0 so the reference state is stress free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBarrier {
    pub eps_j: f64,
    pub q: f64,
}

impl VolumetricEnergy for PowerBarrier {
    fn value(&self, j: f64) -> f64 {
        if j <= 0.0 {
            return f64::INFINITY;
        }
        self.eps_j * (j.powf(-self.q) + self.q * (j - 1.0)) + (j - 1.0).powi(2)
    }

    fn d1(&self, j: f64) -> f64 {
        self.eps_j * self.q * (1.0 - j.powf(-self.q - 1.0)) + 2.0 * (j - 1.0)
    }

    fn d2(&self, j: f64) -> f64 {
        self.eps_j * self.q * (self.q + 1.0) * j.powf(-self.q - 2.0) + 2.0
    }

    fn exponent(&self) -> f64 {
        self.q
    }

    fn blowup_coefficient(&self) -> f64 {
        0.5 * self.eps_j
    }
}

/// ψ_th = −c θ (ln θ − 1) + b(θ) g(m, ζ), with b(θ) = θ/(1+θ) and
/// g = λ_m r(|m|²) + λ_z r((ζ−ζ_ref)²), r(x) = x/(1+x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogThermal {
    pub c: f64,
    pub lambda_m: f64,
    pub lambda_z: f64,
    pub zeta_ref: f64,
}

fn r(x: f64) -> (f64, f64, f64) {
    let d = 1.0 + x;
    (x / d, 1.0 / (d * d), -2.0 / (d * d * d))
}

fn b(theta: f64) -> (f64, f64, f64) {
    let d = 1.0 + theta;
    (theta / d, 1.0 / (d * d), -2.0 / (d * d * d))
}

impl LogThermal {
    fn g(&self, m: &Vec2, z: f64) -> (f64, Vector3<f64>, Matrix3<f64>) {
        let mm = m.norm_squared();
        let dz = z - self.zeta_ref;
        let (rm, rm1, rm2) = r(mm);
        let (rz, rz1, rz2) = r(dz * dz);
        let val = self.lambda_m * rm + self.lambda_z * rz;
        let gm = m * (2.0 * self.lambda_m * rm1);
        let grad = Vector3::new(gm[0], gm[1], 2.0 * self.lambda_z * rz1 * dz);
        let hm = Mat2::identity() * (2.0 * self.lambda_m * rm1) + m * m.transpose() * (4.0 * self.lambda_m * rm2);
        let mut hess = Matrix3::zeros();
        hess.fixed_view_mut::<2, 2>(0, 0).copy_from(&hm);
        hess[(2, 2)] = self.lambda_z * (2.0 * rz1 + 4.0 * rz2 * dz * dz);
        (val, grad, hess)
    }
}

fn xlogx(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

impl ThermalEnergy for LogThermal {
    fn value(&self, m: &Vec2, z: f64, theta: f64) -> f64 {
        -self.c * (xlogx(theta) - theta) + b(theta).0 * self.g(m, z).0
    }

    fn d_theta(&self, m: &Vec2, z: f64, theta: f64) -> f64 {
        -self.c * theta.ln() + b(theta).1 * self.g(m, z).0
    }

    fn d2_theta(&self, m: &Vec2, z: f64, theta: f64) -> f64 {
        -self.c / theta + b(theta).2 * self.g(m, z).0
    }

    fn grad_mz(&self, m: &Vec2, z: f64, theta: f64) -> Vector3<f64> {
        self.g(m, z).1 * b(theta).0
    }

    fn grad_mz_theta(&self, m: &Vec2, z: f64, theta: f64) -> Vector3<f64> {
        self.g(m, z).1 * b(theta).1
    }

    fn hess_mz(&self, m: &Vec2, z: f64, theta: f64) -> Matrix3<f64> {
        self.g(m, z).2 * b(theta).0
    }

    fn slope_at_zero(&self, _m: &Vec2, _z: f64) -> f64 {
        f64::INFINITY
    }

    fn heat_capacity(&self, m: &Vec2, z: f64, theta: f64) -> f64 {
        let t = theta.max(0.0);
        self.c - t * b(t).2 * self.g(m, z).0
    }

    fn heat_capacity_grad(&self, m: &Vec2, z: f64, theta: f64) -> Vector3<f64> {
        let t = theta.max(0.0);
        self.g(m, z).1 * (-t * b(t).2)
    }
}

/// Constant spatial mobility and conductivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantTransport {
    pub mobility: Mat2,
    pub conductivity: Mat2,
}

impl Transport for ConstantTransport {
    fn mobility(&self, _m: &Vec2, _z: f64, _theta: f64) -> Mat2 {
        self.mobility
    }

    fn conductivity(&self, _m: &Vec2, _z: f64, _theta: f64) -> Mat2 {
        self.conductivity
    }
}

/// Parameters of the built-in model family, as read from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BundledParams {
    /// Mass density [kg/m²].
    pub rho: f64,
    /// Shear-like modulus μ_L [Pa].
    pub mu_l: f64,
    /// Strain–concentration coupling β [Pa].
    pub beta: f64,
    /// Concentration stiffness α_c [Pa].
    pub alpha_c: f64,
    pub zeta_ref: f64,
    /// Quadratic and quartic magnetic coefficients.
    pub a2: f64,
    pub a4: f64,
    /// Uniaxial anisotropy along the hard axis.
    pub k_u: f64,
    pub hard_axis: [f64; 2],
    /// Volumetric barrier strength ε_J and exponent q.
    pub eps_j: f64,
    pub q_xi: f64,
    /// Heat capacity scale c [J/(m²K)].
    pub heat_capacity: f64,
    pub lambda_m: f64,
    pub lambda_z: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Diagonal of the spatial mobility and conductivity.
    pub mobility: [f64; 2],
    pub conductivity: [f64; 2],
    /// Kernel singularity exponent the model is paired with.
    pub gamma: f64,
}

impl Default for BundledParams {
    fn default() -> Self {
        BundledParams {
            rho: 1.0,
            mu_l: 1.0,
            beta: 0.1,
            alpha_c: 1.0,
            zeta_ref: 0.5,
            a2: 0.5,
            a4: 0.5,
            k_u: 1.0,
            hard_axis: [0.0, 1.0],
            eps_j: 0.1,
            q_xi: 4.0,
            heat_capacity: 1.0,
            lambda_m: 0.1,
            lambda_z: 0.1,
            tau1: 1.0,
            tau2: 0.1,
            kappa1: 0.01,
            kappa2: 0.01,
            mobility: [0.5, 0.5],
            conductivity: [0.5, 0.5],
            gamma: 0.6,
        }
    }
}

impl BundledParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("mu_l", self.mu_l),
            ("alpha_c", self.alpha_c),
            ("a4", self.a4),
            ("eps_j", self.eps_j),
            ("heat_capacity", self.heat_capacity),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("material.{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("a2", self.a2), ("k_u", self.k_u), ("lambda_m", self.lambda_m), ("lambda_z", self.lambda_z)]
        {
            if !(v >= 0.0) {
                return Err(Error::InvalidInput(format!("material.{name} must be nonnegative, got {v}")));
            }
        }
        if self.q_xi <= 0.0 {
            return Err(Error::InvalidInput("material.q_xi must be positive".into()));
        }
        let n = (self.hard_axis[0].powi(2) + self.hard_axis[1].powi(2)).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput("material.hard_axis must be a unit vector".into()));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<MaterialModel> {
        self.validate()?;
        let phi = StVenantMagnetic {
            mu_l: self.mu_l,
            beta: self.beta,
            alpha_c: self.alpha_c,
            zeta_ref: self.zeta_ref,
            a2: self.a2,
            a4: self.a4,
            k_u: self.k_u,
            hard_axis: Vec2::new(self.hard_axis[0], self.hard_axis[1]),
        };
        let xi0 = PowerBarrier { eps_j: self.eps_j, q: self.q_xi };
        let thermal = LogThermal {
            c: self.heat_capacity,
            lambda_m: self.lambda_m,
            lambda_z: self.lambda_z,
            zeta_ref: self.zeta_ref,
        };
        let transport = ConstantTransport {
            mobility: Mat2::new(self.mobility[0], 0.0, 0.0, self.mobility[1]),
            conductivity: Mat2::new(self.conductivity[0], 0.0, 0.0, self.conductivity[1]),
        };
        Ok(MaterialModel {
            name: "bundled".into(),
            rho: self.rho,
            tau1: self.tau1,
            tau2: self.tau2,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            zeta_ref: self.zeta_ref,
            ground_energy: xi0.value(1.0),
            exponents: Exponents { p1: 4.0, p2: 4.0, p3: 2.0, p4: 4.0, gamma: self.gamma, q_growth: 4.0, delta: 1.5 },
            phi: Arc::new(phi),
            xi0: Arc::new(xi0),
            xi1: None,
            thermal: Arc::new(thermal),
            transport: Arc::new(transport),
        })
    }
}

/// The default bundled model.
pub fn bundled_model() -> MaterialModel {
    BundledParams::default().build().expect("default parameters are valid")
}
