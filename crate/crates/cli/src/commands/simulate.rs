use std::sync::Arc;

use serde::Serialize;
use thermomag::discretization::{DiscreteField, Mesh, SplineSpace};
use thermomag::dynamics::{
    energy_audit, estimate_monitor, nonneg_temperature_check, simulate, Audit, DynamicProblem, EnergyReport, Monitor,
    MonitorRow, StateVector, TemperatureCheck, Trajectory,
};
use thermomag::galerkin::Galerkin;
use thermomag::hyperstress::BoundInputs;
use thermomag::scenario::DynamicScenario;

use crate::artifacts::Artifacts;
use crate::config::RunConfig;
use crate::error::CliError;

pub fn prepare(cfg: &RunConfig) -> Result<DynamicProblem, CliError> {
    let mesh = Mesh::unit_square(cfg.mesh.cells);
    let g = Galerkin::new(cfg.model()?, &mesh, cfg.mesh.degree, &cfg.kernel.spec(), cfg.loads())?;
    let mut init = cfg.scenario.initial(&g)?;
    let n = g.n();
    if let Some(theta) = cfg.initial.theta {
        init.theta = vec![theta; n];
    }
    if let Some(zeta) = cfg.initial.zeta {
        init.zeta = vec![zeta; n];
    }
    if let Some(m) = cfg.initial.magnetization {
        init.m = [vec![m[0]; n], vec![m[1]; n]].concat();
    }
    let s = &cfg.solver;
    Ok(DynamicProblem::new(g, s.eps, s.t_end, s.dt, init, s.options)?)
}

pub const STEP_COLUMNS: [&str; 33] = [
    "t",
    "kinetic",
    "stored",
    "exchange",
    "interfacial",
    "hyperstress",
    "zeeman",
    "load",
    "thermal",
    "mechanical",
    "total",
    "dissipation_m",
    "dissipation_zeta",
    "dissipation_mu",
    "dissipation_reg",
    "adiabatic",
    "load_work",
    "chemical_flux",
    "heat_flux",
    "residual_alpha0",
    "residual_alpha1",
    "enthalpy_defect",
    "mu_residual",
    "laplace_zeta",
    "laplace_m",
    "flux_mu",
    "flux_theta",
    "theta_l1",
    "grad_theta_lr",
    "viscous",
    "theta_min",
    "j_min",
    "zeta_integral",
];

fn step_row(r: &EnergyReport, m: &MonitorRow, st: &StateVector) -> Vec<f64> {
    vec![
        r.t,
        r.kinetic,
        r.stored,
        r.exchange,
        r.interfacial,
        r.hyperstress,
        r.zeeman,
        r.load,
        r.thermal,
        r.mechanical(),
        r.total(),
        r.dissipation_m,
        r.dissipation_zeta,
        r.dissipation_mu,
        r.dissipation_reg,
        r.adiabatic,
        r.load_work,
        r.chemical_flux,
        r.heat_flux,
        r.residual_alpha0,
        r.residual_alpha1,
        r.enthalpy_defect,
        st.mu_residual,
        m.laplace_zeta,
        m.laplace_m,
        m.flux_mu,
        m.flux_theta,
        m.theta_l1,
        m.grad_theta_lr,
        m.viscous,
        r.theta_min,
        r.j_min,
        r.mass,
    ]
}

struct Run {
    trajectory: Trajectory,
    audit: Audit,
    monitor: Monitor,
    temperature: TemperatureCheck,
}

fn run(problem: &DynamicProblem) -> Result<Run, CliError> {
    let trajectory = simulate(problem)?;
    let audit = energy_audit(problem, &trajectory)?;
    let monitor = estimate_monitor(problem, &trajectory)?;
    let temperature = nonneg_temperature_check(problem, &trajectory);
    Ok(Run { trajectory, audit, monitor, temperature })
}

fn write_steps(out: &mut Artifacts, run: &Run) -> Result<(), CliError> {
    let rows: Vec<Vec<f64>> = run
        .audit
        .reports
        .iter()
        .zip(&run.monitor.rows)
        .zip(&run.trajectory.states)
        .map(|((r, m), st)| step_row(r, m, st))
        .collect();
    out.write_csv("steps.csv", &STEP_COLUMNS, &rows)
}

#[derive(Serialize)]
pub struct FieldEntry {
    pub name: &'static str,
    pub file: String,
    #[serde(flatten)]
    pub header: thermomag::discretization::field::FieldHeader,
}

#[derive(Serialize)]
struct SnapshotHeader {
    index: usize,
    t: f64,
    fields: Vec<FieldEntry>,
}

/// Raw little-endian coefficient arrays plus a JSON header per snapshot.
pub fn write_fields(
    out: &mut Artifacts,
    stem: &str,
    space: &Arc<SplineSpace>,
    fields: &[(&'static str, &[f64], usize)],
) -> Result<Vec<FieldEntry>, CliError> {
    let mut entries = vec![];
    for &(name, coeffs, rank) in fields {
        let f = DiscreteField::new(space.clone(), coeffs.to_vec(), rank)?;
        let mut bytes = Vec::with_capacity(8 * coeffs.len());
        f.write_raw(&mut bytes)?;
        let file = format!("{stem}_{name}.f64");
        out.write(&file, &bytes)?;
        entries.push(FieldEntry { name, file, header: f.header() });
    }
    Ok(entries)
}

fn write_snapshots(out: &mut Artifacts, problem: &DynamicProblem, run: &Run, stride: usize) -> Result<(), CliError> {
    if stride == 0 {
        return Ok(());
    }
    let space = &problem.galerkin.space;
    let states = &run.trajectory.states;
    for (k, st) in states.iter().enumerate() {
        if k % stride != 0 && k + 1 != states.len() {
            continue;
        }
        let stem = format!("snapshots/state_{k:05}");
        let fields = write_fields(
            out,
            &stem,
            space,
            &[
                ("chi", &st.chi, 2),
                ("v", &st.v, 2),
                ("m", &st.m, 2),
                ("zeta", &st.zeta, 1),
                ("mu", &st.mu, 1),
                ("theta", &st.theta, 1),
            ],
        )?;
        out.write_json(&format!("{stem}.json"), &SnapshotHeader { index: k, t: st.t, fields })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: DynamicScenario,
    states: usize,
    t_final: f64,
    residual_alpha0: f64,
    residual_alpha1: f64,
    enthalpy_defect: f64,
    energy_scale: f64,
    mu_residual: f64,
    temperature: &'a TemperatureCheck,
    eta_run: f64,
    bound: Option<BoundInputs>,
    monitor_sup: Option<&'a MonitorRow>,
    initial: Option<&'a EnergyReport>,
    last: Option<&'a EnergyReport>,
}

fn summary<'a>(cfg: &RunConfig, run: &'a Run) -> Summary<'a> {
    let states = &run.trajectory.states;
    Summary {
        scenario: cfg.scenario,
        states: states.len(),
        t_final: states.last().map_or(0.0, |s| s.t),
        residual_alpha0: run.audit.residual_alpha0,
        residual_alpha1: run.audit.residual_alpha1,
        enthalpy_defect: run.audit.enthalpy_defect,
        energy_scale: run.audit.scale,
        mu_residual: states.iter().map(|s| s.mu_residual.abs()).fold(0.0, f64::max),
        temperature: &run.temperature,
        eta_run: run.monitor.eta_run,
        bound: run.monitor.bound,
        monitor_sup: run.monitor.sup.last(),
        initial: run.audit.reports.first(),
        last: run.audit.reports.last(),
    }
}

pub fn execute_simulate(cfg: &RunConfig, problem: &DynamicProblem, out: &mut Artifacts) -> Result<(), CliError> {
    let run = run(problem)?;
    write_steps(out, &run)?;
    write_snapshots(out, problem, &run, cfg.output.snapshot_stride)?;
    out.write_json("summary.json", &summary(cfg, &run))
}

#[derive(Serialize)]
struct AuditOutput<'a> {
    summary: Summary<'a>,
    audit: &'a Audit,
    monitor: &'a Monitor,
}

pub fn execute_audit(cfg: &RunConfig, problem: &DynamicProblem, out: &mut Artifacts) -> Result<(), CliError> {
    let run = run(problem)?;
    write_steps(out, &run)?;
    out.write_json("audit.json", &AuditOutput { summary: summary(cfg, &run), audit: &run.audit, monitor: &run.monitor })
}
