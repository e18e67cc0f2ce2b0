use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thermomag::constitutive::{thermal_closure, Vec2};
use thermomag::discretization::{evaluate, Derivative, DiscreteField, Mesh};
use thermomag::galerkin::Galerkin;
use thermomag::magnetostatics::SpatialGrid;
use thermomag::statics::{
    ground_state, minimize, StaticEnergyReport, StaticProblem, StaticResult, StaticState, TraceRow,
};

use super::simulate::write_fields;
use crate::artifacts::Artifacts;
use crate::config::{RunConfig, StaticStart};
use crate::error::CliError;

pub struct Prepared {
    pub problem: StaticProblem,
    pub initial: StaticState,
}

/// Ground state plus a random perturbation of the free χ coefficients and
/// of m, ζ and s; the minimizer restores the integral constraints.
fn perturbed(p: &StaticProblem, theta_ref: f64, seed: u64, size: f64) -> StaticState {
    let mut st = ground_state(p, theta_ref);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clamped = p.clamped();
    for (i, v) in st.chi.iter_mut().enumerate() {
        if !clamped.contains(&i) {
            *v += size * 0.05 * (rng.random::<f64>() - 0.5);
        }
    }
    for v in st.m.iter_mut() {
        *v += size * (rng.random::<f64>() - 0.5);
    }
    for v in st.zeta.iter_mut().chain(st.s.iter_mut()) {
        *v += size * 0.2 * (rng.random::<f64>() - 0.5);
    }
    st
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let s = &cfg.statics;
    let mesh = Mesh::unit_square(cfg.mesh.cells);
    let g = Galerkin::new(cfg.model()?, &mesh, cfg.mesh.degree, &cfg.kernel.spec(), cfg.loads())?;
    let grid = SpatialGrid::around(mesh.lo, mesh.hi, s.grid_margin, s.grid_cells, s.mu0, s.boundary)?;
    let zr = g.model.zeta_ref;
    let z_tot = zr * mesh.measure();
    let s_tot = thermal_closure(&g.model, &Vec2::zeros(), zr, s.theta_ref).s * mesh.measure();
    let mut options = s.minimizer;
    options.seed = cfg.seed;
    let problem = StaticProblem::new(g, s.dirichlet.clone(), z_tot, s_tot, grid, options)?;
    let initial = match s.start {
        StaticStart::Ground => ground_state(&problem, s.theta_ref),
        StaticStart::Perturbed => perturbed(&problem, s.theta_ref, cfg.seed, s.perturbation),
    };
    Ok(Prepared { problem, initial })
}

const SLICE_COLUMNS: [&str; 10] = ["x", "y", "chi_x", "chi_y", "det_f", "m_x", "m_y", "zeta", "s", "m_norm"];

fn slices(p: &StaticProblem, st: &StaticState, points: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let space = p.galerkin.space.clone();
    let pts: Vec<[f64; 2]> = (0..points.max(2)).map(|k| [k as f64 / (points.max(2) - 1) as f64, 0.5]).collect();
    let chi = DiscreteField::new(space.clone(), st.chi.clone(), 2)?;
    let m = DiscreteField::new(space.clone(), st.m.clone(), 2)?;
    let z = DiscreteField::new(space.clone(), st.zeta.clone(), 1)?;
    let s = DiscreteField::new(space, st.s.clone(), 1)?;
    let chi_v = evaluate(&chi, &pts, Derivative::Value)?;
    let chi_g = evaluate(&chi, &pts, Derivative::Gradient)?;
    let m_v = evaluate(&m, &pts, Derivative::Value)?;
    let z_v = evaluate(&z, &pts, Derivative::Value)?;
    let s_v = evaluate(&s, &pts, Derivative::Value)?;
    Ok((0..pts.len())
        .map(|k| {
            let f = &chi_g[k];
            vec![
                pts[k][0],
                pts[k][1],
                chi_v[k][0],
                chi_v[k][1],
                f[0] * f[3] - f[1] * f[2],
                m_v[k][0],
                m_v[k][1],
                z_v[k][0],
                s_v[k][0],
                m_v[k][0].hypot(m_v[k][1]),
            ]
        })
        .collect())
}

#[derive(Serialize)]
struct Trace<'a> {
    converged: bool,
    iterations: usize,
    termination: &'a str,
    rows: &'a [TraceRow],
}

#[derive(Serialize)]
struct Summary<'a> {
    converged: bool,
    iterations: usize,
    termination: &'a str,
    energy: &'a StaticEnergyReport,
    constraint_zeta: f64,
    constraint_entropy: f64,
    chemical_potential: f64,
    temperature: f64,
    eta_run: f64,
    gap: Option<f64>,
}

pub fn execute(cfg: &RunConfig, prep: &Prepared, out: &mut Artifacts) -> Result<(), CliError> {
    let p = &prep.problem;
    let res: StaticResult = minimize(p, &prep.initial)?;
    let st = &res.state;
    let fields = write_fields(
        out,
        "fields/final",
        &p.galerkin.space,
        &[("chi", &st.chi, 2), ("m", &st.m, 2), ("zeta", &st.zeta, 1), ("s", &st.s, 1)],
    )?;
    out.write_json("fields/final.json", &fields)?;
    out.write_json(
        "trace.json",
        &Trace {
            converged: res.converged,
            iterations: res.iterations,
            termination: &res.termination,
            rows: &res.trace,
        },
    )?;
    out.write_csv("slices.csv", &SLICE_COLUMNS, &slices(p, st, cfg.output.slice_points)?)?;
    let (con_z, con_s) = p.constraint_residuals(st);
    out.write_json(
        "summary.json",
        &Summary {
            converged: res.converged,
            iterations: res.iterations,
            termination: &res.termination,
            energy: &res.report,
            constraint_zeta: con_z,
            constraint_entropy: con_s,
            chemical_potential: res.chemical_potential,
            temperature: res.temperature,
            eta_run: res.eta_run,
            gap: res.trace.last().map(|r| r.gap),
        },
    )?;
    if !res.converged {
        return Err(thermomag::Error::SolverDivergence(format!("static minimizer stopped: {}", res.termination)).into());
    }
    Ok(())
}
