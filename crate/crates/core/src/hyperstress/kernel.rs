use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic sixth-order kernel 𝒦(x) = k(|x|) 𝕀 with
/// k(r) = ε_K r^{−(d+2γ)} ramp(r/ε_cut).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub gamma: f64,
    pub strength: f64,
    /// Radius beyond which the kernel vanishes; `inf` disables the cutoff.
    pub cutoff_radius: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec { gamma: 0.6, strength: 1e-4, cutoff_radius: 4.0 }
    }
}

/// C¹ cutoff: 1 on [0, ½], 0 on [1, ∞), cubic smoothstep in between.
pub fn ramp(t: f64) -> f64 {
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let s = 2.0 * (t - 0.5);
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

impl KernelSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let lower = dim as f64 / 2.0 - 1.0;
        if !(self.gamma > lower) || !(self.gamma < 1.0) {
            return Err(Error::InvalidInput(format!("kernel.gamma must lie in ({lower}, 1), got {}", self.gamma)));
        }
        if !(self.strength > 0.0) || !self.strength.is_finite() {
            return Err(Error::InvalidInput("kernel.strength must be positive".into()));
        }
        if !(self.cutoff_radius > 0.0) {
            return Err(Error::InvalidInput("kernel.cutoff_radius must be positive".into()));
        }
        Ok(())
    }

    pub fn exponent(&self, dim: usize) -> f64 {
        dim as f64 + 2.0 * self.gamma
    }

    pub fn eval(&self, r: f64, dim: usize) -> f64 {
        let cut = if self.cutoff_radius.is_finite() { ramp(r / self.cutoff_radius) } else { 1.0 };
        if cut == 0.0 {
            return 0.0;
        }
        self.strength * r.powf(-self.exponent(dim)) * cut
    }
}
