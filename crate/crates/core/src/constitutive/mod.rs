//! Material model: free-energy split, constitutive maps, Legendre
//! machinery between temperature, entropy and enthalpy, pull-backs, and a
//! sampled assumption checker.

pub mod assumptions;
pub mod bundled;
pub mod legendre;
pub mod model;
pub mod tensor;

pub use assumptions::{check_assumptions, AssumptionCheck, AssumptionReport, SampleSpec};
pub use bundled::{bundled_model, BundledParams, ConstantTransport, LogThermal, PowerBarrier, StVenantMagnetic};
pub use legendre::{
    entropy_floor, invert_enthalpy, legendre_internal_energy, legendre_thermal, temperature_at_entropy,
    thermal_closure, ThermalState,
};
pub use model::{
    eval_bulk_energy, eval_stress, pull_back_tensor, Exponents, MagChemEnergy, MaterialModel, MechanicalEnergy,
    ThermalEnergy, Transport, VolumetricEnergy,
};
pub use tensor::{Mat2, Vec2};
