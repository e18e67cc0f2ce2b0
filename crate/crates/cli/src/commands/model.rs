use thermomag::constitutive::{check_assumptions, MaterialModel};

use crate::artifacts::Artifacts;
use crate::config::RunConfig;
use crate::error::CliError;

pub fn execute(cfg: &RunConfig, model: &MaterialModel, out: &mut Artifacts) -> Result<(), CliError> {
    let spec = cfg.material.samples.clone().unwrap_or_default();
    let report = check_assumptions(model, &spec);
    out.write_json("model_check.json", &report)?;
    if !report.all_passed() {
        return Err(CliError::Check(format!("model assumptions violated: {}", report.failed().join(", "))));
    }
    Ok(())
}
