//! Analytic load families: amplitude × time profile × space profile.

use serde::{Deserialize, Serialize};

use crate::constitutive::Mat2;
use crate::discretization::Facet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeProfile {
    #[default]
    Constant,
    /// C¹ ramp s²(3 − 2s), s = t/duration, from 0 to 1.
    Ramp { duration: f64 },
    /// sin(2π t/period + phase).
    Sinusoid { period: f64, phase: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Ramp { duration } => {
                let s = (t / duration).clamp(0.0, 1.0);
                s * s * (3.0 - 2.0 * s)
            }
            TimeProfile::Sinusoid { period, phase } => (std::f64::consts::TAU * t / period + phase).sin(),
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 0.0,
            TimeProfile::Ramp { duration } => {
                if t <= 0.0 || t >= duration {
                    0.0
                } else {
                    let s = t / duration;
                    6.0 * s * (1.0 - s) / duration
                }
            }
            TimeProfile::Sinusoid { period, phase } => {
                let w = std::f64::consts::TAU / period;
                w * (w * t + phase).cos()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            TimeProfile::Ramp { duration } if !(duration > 0.0) => {
                Err(Error::InvalidInput("ramp duration must be positive".into()))
            }
            TimeProfile::Sinusoid { period, .. } if !(period > 0.0) => {
                Err(Error::InvalidInput("sinusoid period must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceProfile {
    #[default]
    Uniform,
    /// exp(−|x − c|² / (2 w²)).
    GaussianBump { center: [f64; 2], width: f64 },
}

impl SpaceProfile {
    /// Value, gradient and Hessian (xx, xy, yy).
    pub fn eval(&self, x: [f64; 2]) -> (f64, [f64; 2], [f64; 3]) {
        match *self {
            SpaceProfile::Uniform => (1.0, [0.0; 2], [0.0; 3]),
            SpaceProfile::GaussianBump { center, width } => {
                let w2 = width * width;
                let d = [x[0] - center[0], x[1] - center[1]];
                let v = (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * w2)).exp();
                let g = [-d[0] / w2 * v, -d[1] / w2 * v];
                let h =
                    [(d[0] * d[0] / w2 - 1.0) / w2 * v, d[0] * d[1] / (w2 * w2) * v, (d[1] * d[1] / w2 - 1.0) / w2 * v];
                (v, g, h)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SpaceProfile::GaussianBump { width, .. } if !(width > 0.0) => {
                Err(Error::InvalidInput("gaussian bump width must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct VectorLoad {
    pub amplitude: [f64; 2],
    pub time: TimeProfile,
    pub space: SpaceProfile,
}

impl VectorLoad {
    pub fn constant(amplitude: [f64; 2]) -> VectorLoad {
        VectorLoad { amplitude, ..VectorLoad::default() }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == [0.0, 0.0]
    }

    pub fn value(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let s = self.space.eval(x).0 * self.time.value(t);
        [self.amplitude[0] * s, self.amplitude[1] * s]
    }

    pub fn rate(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let s = self.space.eval(x).0 * self.time.rate(t);
        [self.amplitude[0] * s, self.amplitude[1] * s]
    }

    /// ∂v_i/∂x_j.
    pub fn gradient(&self, x: [f64; 2], t: f64) -> Mat2 {
        let g = self.space.eval(x).1;
        let a = self.time.value(t);
        Mat2::new(
            self.amplitude[0] * g[0] * a,
            self.amplitude[0] * g[1] * a,
            self.amplitude[1] * g[0] * a,
            self.amplitude[1] * g[1] * a,
        )
    }

    /// ∂²v_i/∂x_j∂x_k as two symmetric matrices, one per component.
    pub fn hessian(&self, x: [f64; 2], t: f64) -> [Mat2; 2] {
        let h = self.space.eval(x).2;
        let a = self.time.value(t);
        let m = Mat2::new(h[0], h[1], h[1], h[2]) * a;
        [m * self.amplitude[0], m * self.amplitude[1]]
    }

    fn validate(&self) -> Result<()> {
        self.time.validate()?;
        self.space.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ScalarLoad {
    pub amplitude: f64,
    pub time: TimeProfile,
    pub space: SpaceProfile,
}

impl ScalarLoad {
    pub fn constant(amplitude: f64) -> ScalarLoad {
        ScalarLoad { amplitude, ..ScalarLoad::default() }
    }

    pub fn value(&self, x: [f64; 2], t: f64) -> f64 {
        self.amplitude * self.space.eval(x).0 * self.time.value(t)
    }

    pub fn rate(&self, x: [f64; 2], t: f64) -> f64 {
        self.amplitude * self.space.eval(x).0 * self.time.rate(t)
    }

    fn validate(&self) -> Result<()> {
        self.time.validate()?;
        self.space.validate()
    }
}

/// External actions on the body. `field` is the spatial field 𝗵_e,
/// evaluated at deformed positions; the others are referential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadSet {
    pub body_force: VectorLoad,
    pub traction: VectorLoad,
    pub traction_facets: Vec<Facet>,
    pub field: VectorLoad,
    pub chemical_potential: ScalarLoad,
    pub temperature: ScalarLoad,
    /// Boundary mass transfer coefficient M_Γ.
    pub mass_transfer: f64,
    /// Boundary heat transfer coefficient K_Γ.
    pub heat_transfer: f64,
    /// Facets carrying the mass and heat transfer conditions.
    pub transfer_facets: Vec<Facet>,
}

impl Default for LoadSet {
    fn default() -> Self {
        LoadSet {
            body_force: VectorLoad::default(),
            traction: VectorLoad::default(),
            traction_facets: vec![],
            field: VectorLoad::default(),
            chemical_potential: ScalarLoad::default(),
            temperature: ScalarLoad::default(),
            mass_transfer: 0.0,
            heat_transfer: 0.0,
            transfer_facets: vec![Facet::Left, Facet::Right, Facet::Bottom, Facet::Top],
        }
    }
}

impl LoadSet {
    pub fn validate(&self) -> Result<()> {
        self.body_force.validate()?;
        self.traction.validate()?;
        self.field.validate()?;
        self.chemical_potential.validate()?;
        self.temperature.validate()?;
        if !(self.mass_transfer >= 0.0) || !(self.heat_transfer >= 0.0) {
            return Err(Error::InvalidInput("transfer coefficients must be nonnegative".into()));
        }
        Ok(())
    }
}
