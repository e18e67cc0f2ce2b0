//! Run configuration, read from a TOML file.
//!
//! Quantities are in SI units of the two-dimensional body: lengths in m,
//! energies per unit thickness in J/m, temperatures in K, times in s.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thermomag::constitutive::{BundledParams, MaterialModel, SampleSpec};
use thermomag::dynamics::DynamicOptions;
use thermomag::hyperstress::KernelSpec;
use thermomag::loads::LoadSet;
use thermomag::magnetostatics::{GapOptions, PotentialBoundary};
use thermomag::scenario::{DynamicScenario, RunSpec};
use thermomag::statics::StaticOptions;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that replaces `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "THERMOMAG_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Seed of the Monte-Carlo rasterization and of perturbed initial guesses.
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses the available parallelism.
    #[serde(default)]
    pub threads: usize,
    pub output_dir: String,
    /// Bundled scenario supplying initial data and default loads.
    #[serde(default = "default_scenario")]
    pub scenario: DynamicScenario,
    #[serde(default)]
    pub material: MaterialSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub mesh: MeshSection,
    /// Replaces the scenario loads when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loads: Option<LoadSet>,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub statics: StaticsSection,
    #[serde(default)]
    pub magnetostatics: MagnetostaticsSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_scenario() -> DynamicScenario {
    DynamicScenario::GroundState
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaterialFamily {
    #[default]
    Bundled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialSection {
    pub family: MaterialFamily,
    pub params: BundledParams,
    /// Sampling grid of `check-model`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub gamma: f64,
    pub strength: f64,
    pub cutoff_radius: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        let k = KernelSpec::default();
        KernelSection { gamma: k.gamma, strength: k.strength, cutoff_radius: k.cutoff_radius }
    }
}

impl KernelSection {
    pub fn spec(&self) -> KernelSpec {
        KernelSpec { gamma: self.gamma, strength: self.strength, cutoff_radius: self.cutoff_radius }
    }
}

/// Uniform mesh of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    pub cells: usize,
    pub degree: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection { cells: 8, degree: 3 }
    }
}

/// Constant overrides of the scenario initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    /// Initial temperature θ₀ [K].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub magnetization: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    /// Final time [s].
    pub t_end: f64,
    /// Nominal time step [s].
    pub dt: f64,
    /// Regularization parameter of the heat sources.
    pub eps: f64,
    /// Newton and step-control settings.
    pub options: DynamicOptions,
}

impl Default for SolverSection {
    fn default() -> Self {
        let r = RunSpec::default();
        SolverSection { t_end: r.t_end, dt: r.dt, eps: r.eps, options: DynamicOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StaticStart {
    #[default]
    Ground,
    /// Ground state plus a random feasible perturbation drawn from `seed`.
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StaticsSection {
    pub dirichlet: Vec<thermomag::discretization::Facet>,
    /// Temperature [K] of the ground state fixing the total entropy.
    pub theta_ref: f64,
    pub start: StaticStart,
    pub perturbation: f64,
    /// Truncation box of the stray field: margin factor and cells per axis.
    pub grid_margin: f64,
    pub grid_cells: usize,
    pub mu0: f64,
    pub boundary: PotentialBoundary,
    pub minimizer: StaticOptions,
}

impl Default for StaticsSection {
    fn default() -> Self {
        StaticsSection {
            dirichlet: vec![thermomag::discretization::Facet::Left],
            theta_ref: 1.0,
            start: StaticStart::Ground,
            perturbation: 0.3,
            grid_margin: 2.0,
            grid_cells: 48,
            mu0: 1.0,
            boundary: PotentialBoundary::Robin,
            minimizer: StaticOptions::default(),
        }
    }
}

/// Uniformly magnetized body deformed by an affine map z = F x + c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MagnetostaticsSection {
    /// Referential magnetization [A].
    pub magnetization: [f64; 2],
    /// Rows of F.
    pub deformation: [[f64; 2]; 2],
    pub translation: [f64; 2],
    pub margin: f64,
    pub grid_cells: usize,
    pub mu0: f64,
    pub boundary: PotentialBoundary,
    pub gap_samples: usize,
    /// Points of the demagnetizing-field slice along the horizontal line
    /// through the image centre.
    pub slice_points: usize,
}

impl Default for MagnetostaticsSection {
    fn default() -> Self {
        MagnetostaticsSection {
            magnetization: [1.0, 0.0],
            deformation: [[1.0, 0.0], [0.0, 1.0]],
            translation: [0.0, 0.0],
            margin: 4.0,
            grid_cells: 128,
            mu0: 1.0,
            boundary: PotentialBoundary::Robin,
            gap_samples: GapOptions::default().samples,
            slice_points: 201,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Coefficient snapshots every `snapshot_stride` states; 0 disables them.
    pub snapshot_stride: usize,
    /// Points of the CSV field slices along y = ½.
    pub slice_points: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { snapshot_stride: 16, slice_points: 65 }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().trim().to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    /// Reads a config file, or the config echoed inside a run manifest.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            let manifest: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("manifest: {e}")))?;
            let echoed = manifest["resolved_config"]
                .as_str()
                .ok_or_else(|| CliError::Config("manifest has no resolved_config".into()))?;
            return Self::parse(echoed);
        }
        Self::parse(&text)
    }

    pub fn to_text(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize the resolved config: {e}")))
    }

    /// Fills every optional section so the echoed config reproduces the run.
    pub fn resolve(mut self) -> RunConfig {
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                self.output_dir = dir;
            }
        }
        if self.loads.is_none() {
            self.loads = Some(self.scenario.loads());
        }
        self.statics.minimizer.seed = self.seed;
        if self.material.samples.is_none() {
            self.material.samples = Some(SampleSpec::default());
        }
        self
    }

    pub fn loads(&self) -> LoadSet {
        self.loads.clone().unwrap_or_else(|| self.scenario.loads())
    }

    pub fn model(&self) -> Result<MaterialModel, CliError> {
        let p = &self.material.params;
        if (p.gamma - self.kernel.gamma).abs() > 0.0 {
            return Err(CliError::Config(format!(
                "material.params.gamma = {} differs from kernel.gamma = {}",
                p.gamma, self.kernel.gamma
            )));
        }
        match self.material.family {
            MaterialFamily::Bundled => Ok(p.build()?),
        }
    }

    /// Structural checks that do not need any assembly.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.output_dir.trim().is_empty() {
            return Err(CliError::Config("output_dir must not be empty".into()));
        }
        if self.mesh.cells == 0 {
            return Err(CliError::Config("mesh.cells must be positive".into()));
        }
        if !(2..=5).contains(&self.mesh.degree) {
            return Err(CliError::Config(format!("mesh.degree must lie in 2..=5, got {}", self.mesh.degree)));
        }
        self.kernel.spec().validate(2)?;
        self.loads().validate()?;
        self.model()?;
        let s = &self.solver;
        if !(s.dt > 0.0) || !(s.t_end > 0.0) || !s.t_end.is_finite() {
            return Err(CliError::Config("solver.dt and solver.t_end must be positive".into()));
        }
        if !(s.eps >= 0.0) {
            return Err(CliError::Config("solver.eps must be nonnegative".into()));
        }
        if !(self.statics.theta_ref > 0.0) {
            return Err(CliError::Config("statics.theta_ref must be positive".into()));
        }
        Ok(())
    }
}
