//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero when any
//! criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermomag::constitutive::bundled_model;
use thermomag::discretization::{DiscreteField, Mesh};
use thermomag::dynamics::*;
use thermomag::galerkin::Galerkin;
use thermomag::hyperstress::*;
use thermomag::loads::LoadSet;
use thermomag::magnetostatics::*;
use thermomag::scenario::*;
use thermomag::statics::*;

mod common;
use common::*;

type Outcome = Result<(bool, String), String>;

struct DynamicSummary {
    label: String,
    theta_min: f64,
    eta_run: f64,
    eta_bound: Option<f64>,
}

#[derive(Default)]
struct Shared {
    dynamic: Vec<DynamicSummary>,
    enthalpy_defect: f64,
    statics: Vec<StaticResult>,
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn summarize(label: &str, p: &DynamicProblem, tr: &Trajectory) -> Result<DynamicSummary, String> {
    let mon = estimate_monitor(p, tr).map_err(err)?;
    let tc = nonneg_temperature_check(p, tr);
    Ok(DynamicSummary {
        label: label.into(),
        theta_min: tc.theta_min,
        eta_run: mon.eta_run,
        eta_bound: mon.bound.and_then(|b| b.eta),
    })
}

fn energy_balance(sh: &mut Shared) -> Outcome {
    let start = Instant::now();
    let op = unit_square_operator(8, 3, &KernelSpec::default()).map_err(err)?;
    let mut r0 = vec![];
    let mut r1 = vec![];
    for k in [64u32, 128, 256, 512] {
        let run = RunSpec { cells: 8, degree: 3, t_end: 1.0, dt: 1.0 / k as f64, eps: 0.0 };
        let p = bundled_dynamic(DynamicScenario::Driven, &run, Some(op.clone())).map_err(err)?;
        let tr = simulate(&p).map_err(err)?;
        let audit = energy_audit(&p, &tr).map_err(err)?;
        r0.push(audit.residual_alpha0);
        r1.push(audit.residual_alpha1);
        sh.enthalpy_defect = sh.enthalpy_defect.max(audit.enthalpy_defect);
        sh.dynamic.push(summarize(&format!("driven dt=1/{k}"), &p, &tr)?);
    }
    let secs = start.elapsed().as_secs_f64();
    let order = |r: &[f64]| r.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    let (o0, o1) = (order(&r0), order(&r1));
    let ok = o0 >= 0.9 && o1 >= 0.9 && r0[3] <= 1e-3 && r1[3] <= 1e-3 && secs <= 300.0;
    Ok((
        ok,
        format!(
            "alpha0 {:.2e}..{:.2e} (order {o0:.2}), alpha1 {:.2e}..{:.2e} (order {o1:.2}), {secs:.0} s",
            r0[0], r0[3], r1[0], r1[3]
        ),
    ))
}

fn temperature_sign(sh: &mut Shared) -> Outcome {
    let op = unit_square_operator(8, 3, &KernelSpec::default()).map_err(err)?;
    for scen in [DynamicScenario::GroundState, DynamicScenario::Smooth, DynamicScenario::Cooling] {
        for k in [64u32, 512] {
            if k == 512 && scen != DynamicScenario::Cooling {
                continue;
            }
            let run = RunSpec { dt: 1.0 / k as f64, ..RunSpec::default() };
            let p = bundled_dynamic(scen, &run, Some(op.clone())).map_err(err)?;
            let tr = simulate(&p).map_err(err)?;
            sh.dynamic.push(summarize(&format!("{scen:?} dt=1/{k}"), &p, &tr)?);
        }
    }
    let worst = sh.dynamic.iter().min_by(|a, b| a.theta_min.total_cmp(&b.theta_min)).unwrap();
    Ok((
        worst.theta_min >= -1e-8,
        format!("theta_min {:.3e} ({}), {} runs", worst.theta_min, worst.label, sh.dynamic.len()),
    ))
}

fn static_runs(sh: &mut Shared) -> Result<(), String> {
    if !sh.statics.is_empty() {
        return Ok(());
    }
    let p = aligned_field_static(4, [0.3, 0.0], StaticOptions::default()).map_err(err)?;
    let starts = [ground_state(&p, 1.0), perturbed(&p, 3, 0.4), perturbed(&p, 17, 0.6)];
    for s in &starts {
        sh.statics.push(minimize(&p, s).map_err(err)?);
    }
    Ok(())
}

fn determinant_bound(sh: &mut Shared) -> Outcome {
    static_runs(sh)?;
    let dyn_eta = sh.dynamic.iter().map(|d| d.eta_run).fold(f64::INFINITY, f64::min);
    let static_eta = sh.statics.iter().map(|r| r.eta_run).fold(f64::INFINITY, f64::min);
    let bound = sh.dynamic.iter().filter_map(|d| d.eta_bound).fold(f64::INFINITY, f64::min);
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut oracle_err = 0.0f64;
    for _ in 0..20 {
        let d = if rng.random_bool(0.5) { 1 } else { 2 };
        let gamma = rng.random_range(0.1..0.95);
        let alpha = gamma - (d as f64 / 2.0 - 1.0);
        let p = d as f64 / alpha * rng.random_range(1.2..6.0);
        let c = rng.random_range(0.0..3.0);
        let m = rng.random_range(0.1..5.0);
        let v = healey_kromer_eta(c, m, p, gamma, d).map_err(err)?;
        let o = grid_search_eta(c * m.powf(alpha / d as f64), p * alpha / d as f64);
        oracle_err = oracle_err.max((v - o).abs());
    }
    let bound_text = if bound.is_finite() { format!("{bound:.3e}") } else { "n/a".into() };
    Ok((
        dyn_eta > 0.0 && static_eta > 0.0 && oracle_err <= 1e-8,
        format!(
            "eta_run dynamic {dyn_eta:.4}, static {static_eta:.4}, bound {bound_text}, eta oracle error {oracle_err:.1e}"
        ),
    ))
}

fn gagliardo() -> Outcome {
    let mut worst = 0.0f64;
    let cases: [(usize, Mesh); 2] = [(1, Mesh::interval(0.0, 1.0, 8).map_err(err)?), (2, Mesh::unit_square(4))];
    for (d, mesh) in cases {
        let gamma = 0.6;
        let op = GagliardoOperator::new(&mesh, 3, &kernel(gamma), &PairQuadrature::default()).map_err(err)?;
        let fields = if d == 1 { fields_1d() } else { fields_2d() };
        for g in fields {
            let e = energy_of(&op, &*g);
            let o = 0.25 * converged_oracle(d, gamma, &*g);
            worst = worst.max((e - o).abs() / o);
        }
    }
    let op = GagliardoOperator::new(&Mesh::unit_square(4), 3, &kernel(0.6), &PairQuadrature::default()).map_err(err)?;
    let constant = energy_of(&op, &|_, _| 2.5);

    let g = Galerkin::new(bundled_model(), &Mesh::unit_square(4), 3, &KernelSpec::default(), LoadSet::default())
        .map_err(err)?;
    let n = g.n();
    let mut chi = g.identity_map();
    for (a, x) in g.space.greville().iter().enumerate() {
        chi[a] += 0.05 * (2.0 * x[1]).sin() * x[0] * x[0];
        chi[n + a] += 0.04 * x[0] * x[1] * x[1];
    }
    let e = g.hyperstress_energy(&chi).map_err(err)?;
    let (c, s) = (0.9f64.cos(), 0.9f64.sin());
    let mut rot = chi.clone();
    for a in 0..n {
        rot[a] = c * chi[a] - s * chi[n + a] + 3.0;
        rot[n + a] = s * chi[a] + c * chi[n + a] - 1.0;
    }
    let frame = (g.hyperstress_energy(&rot).map_err(err)? - e).abs() / e;
    Ok((
        worst <= 1e-4 && constant == 0.0 && frame <= 1e-12,
        format!("oracle rel. error {worst:.1e}, constant field {constant:e}, frame {frame:.1e}"),
    ))
}

fn variational() -> Outcome {
    let p = bundled_dynamic(DynamicScenario::Driven, &RunSpec { cells: 4, ..RunSpec::default() }, None).map_err(err)?;
    let g = &p.galerkin;
    let st = random_state(&p, 1);
    let theta = g.values(&st.theta);
    let mom = residual_momentum(&p, &st, st.t).map_err(err)?;
    let e_mom = fd_worst(|chi| g.mechanical_items(chi, &st.m, &st.zeta, st.t).unwrap().potential(), &mom, &st.chi, 2);
    let energy = |m: &[f64], z: &[f64]| {
        let it = g.mechanical_items(&st.chi, m, z, st.t).unwrap();
        let th: Vec<f64> =
            g.points(&st.chi, m, z).iter().zip(&theta).map(|(pt, &t)| g.model.psi_th(&pt.m, pt.z, t)).collect();
        it.stored + it.exchange + it.interfacial - it.zeeman + g.quad.integrate(&th)
    };
    let gm = residual_magnetization(&p, &st, st.t).map_err(err)?;
    let e_mag = fd_worst(|m| energy(m, &st.zeta), &gm, &st.m, 4);
    let (_, gz) = g.grad_mz(&st.chi, &st.m, &st.zeta, &theta, st.t);
    let e_ch = fd_worst(|z| energy(&st.m, z), &gz, &st.zeta, 5);

    let sp = aligned_field_static(4, [0.3, -0.1], StaticOptions::default()).map_err(err)?;
    let ss = perturbed(&sp, 7, 0.5);
    let grad = static_gradient(&sp, &ss).map_err(err)?;
    let n = sp.n();
    let e_static =
        fd_worst(|u| total_static_energy(&sp, &StaticState::from_vec(u, n)).unwrap().total, &grad, &ss.to_vec(), 11);
    let worst = e_mom.max(e_mag).max(e_ch).max(e_static);
    Ok((
        worst <= 1e-5,
        format!("momentum {e_mom:.1e}, magnetization {e_mag:.1e}, diffusion {e_ch:.1e}, static {e_static:.1e}"),
    ))
}

fn conservation(sh: &Shared) -> Outcome {
    let run = RunSpec { cells: 8, dt: 1.0 / 64.0, t_end: 100.0 / 64.0, ..RunSpec::default() };
    let mut p = bundled_dynamic(DynamicScenario::Driven, &run, None).map_err(err)?;
    p.galerkin.loads.mass_transfer = 0.0;
    let tr = simulate(&p).map_err(err)?;
    let m0 = p.galerkin.integral(&tr.states[0].zeta);
    let drift = tr.states.iter().map(|s| (p.galerkin.integral(&s.zeta) - m0).abs()).fold(0.0, f64::max);
    let audit = energy_audit(&p, &tr).map_err(err)?;
    let defect = audit.enthalpy_defect.max(sh.enthalpy_defect);
    Ok((
        drift <= 1e-10 && defect <= 1e-9 && tr.states.len() == 101,
        format!("mass drift {drift:.1e} over 100 steps, enthalpy defect {defect:.1e}"),
    ))
}

fn magnetostatics() -> Outcome {
    let exact = PI / 4.0;
    let sol = disk_energy(&disk_grid(4.0, 256, PotentialBoundary::Robin));
    let rel = (sol.energy - exact).abs() / exact;
    let agree = ((sol.energy - sol.energy_moment) / sol.energy).abs();
    let res: Vec<f64> = [32, 64, 128, 256]
        .iter()
        .map(|&n| (disk_energy(&disk_grid(4.0, n, PotentialBoundary::Robin)).energy - exact).abs())
        .collect();
    let margin: Vec<f64> = [2.0, 3.0, 4.0, 6.0]
        .iter()
        .map(|&m: &f64| {
            let grid = disk_grid(m, (24.0 * (1.0 + m)).round() as usize, PotentialBoundary::ZeroDirichlet);
            (disk_energy(&grid).energy - exact).abs()
        })
        .collect();
    let mono = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    Ok((
        rel <= 0.02 && agree <= 1e-8 && mono(&res) && mono(&margin),
        format!(
            "error {:.2}% at 256^2, expressions agree to {agree:.1e}, monotone in resolution {} and margin {}",
            100.0 * rel,
            mono(&res),
            mono(&margin)
        ),
    ))
}

fn injectivity_gap() -> Outcome {
    let opts = GapOptions { samples: 1_000_000, ..GapOptions::default() };
    let mut worst = 0.0f64;
    let maps: Vec<DiscreteField> = vec![
        field(Mesh::unit_square(4), |x| vec![x[0], x[1]]),
        field(Mesh::unit_square(4), |x| vec![2.0 * x[0] + 0.3 * x[1], x[1]]),
        field(Mesh::unit_square(4), |x| {
            let y = [1.3 * x[0] + 0.1 * x[1] * x[1], x[1]];
            vec![0.8 * y[0] - 0.6 * y[1] + 5.0, 0.6 * y[0] + 0.8 * y[1] - 2.0]
        }),
    ];
    for chi in &maps {
        let r = ciarlet_necas_gap(chi, &opts);
        worst = worst.max(r.gap.abs() / chi.space.mesh.measure());
    }
    let r = ciarlet_necas_gap(&double_annulus(), &opts);
    let ratio = r.gap / annulus_area();
    Ok((
        worst <= 0.01 && (ratio - 1.0).abs() <= 0.02,
        format!("injective maps {:.2}% of |Omega|, double cover gap/overlap {ratio:.4}", 100.0 * worst),
    ))
}

fn regularization() -> Outcome {
    let op = unit_square_operator(8, 3, &KernelSpec::default()).map_err(err)?;
    let mut runs = vec![];
    for eps in [1e-2, 1e-3, 1e-4] {
        let run = RunSpec { eps, ..RunSpec::default() };
        let p = bundled_dynamic(DynamicScenario::Smooth, &run, Some(op.clone())).map_err(err)?;
        runs.push(simulate(&p).map_err(err)?);
    }
    let flat = |s: &StateVector| -> Vec<f64> {
        [&s.chi, &s.v, &s.m, &s.zeta, &s.theta].iter().flat_map(|v| v.iter().copied()).collect()
    };
    let dist = |a: &Trajectory, b: &Trajectory| {
        a.states
            .iter()
            .zip(&b.states)
            .map(|(x, y)| flat(x).iter().zip(flat(y)).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    };
    let (d1, d2) = (dist(&runs[0], &runs[1]), dist(&runs[1], &runs[2]));
    let ratio = d2 / d1;
    Ok((ratio <= 0.5, format!("differences {d1:.2e}, {d2:.2e}, ratio {ratio:.3}")))
}

fn static_minimizer(sh: &mut Shared) -> Outcome {
    static_runs(sh)?;
    let p = aligned_field_static(4, [0.3, 0.0], StaticOptions::default()).map_err(err)?;
    let energies: Vec<f64> = sh.statics.iter().map(|r| r.report.total).collect();
    let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / lo.abs();
    let con = sh
        .statics
        .iter()
        .map(|r| {
            let (a, b) = p.constraint_residuals(&r.state);
            a.abs().max(b.abs())
        })
        .fold(0.0, f64::max);
    let monotone = sh.statics.iter().all(|r| r.trace.windows(2).all(|w| w[1].energy <= w[0].energy));
    let converged = sh.statics.iter().all(|r| r.converged);
    Ok((
        spread <= 1e-6 && con <= 1e-8 && monotone && converged,
        format!(
            "energy spread {spread:.1e}, constraint residual {con:.1e}, monotone {monotone}, converged {converged}"
        ),
    ))
}

fn main() {
    let mut sh = Shared::default();
    let names = [
        "energy-balance closure",
        "temperature nonnegativity",
        "determinant lower bound",
        "Gagliardo oracle",
        "variational consistency",
        "conservation identities",
        "magnetostatic oracle",
        "injectivity gap",
        "regularization consistency",
        "static minimizer",
    ];
    let mut failed = 0;
    for (k, name) in names.iter().enumerate() {
        let start = Instant::now();
        let out = match k {
            0 => energy_balance(&mut sh),
            1 => temperature_sign(&mut sh),
            2 => determinant_bound(&mut sh),
            3 => gagliardo(),
            4 => variational(),
            5 => conservation(&sh),
            6 => magnetostatics(),
            7 => injectivity_gap(),
            8 => regularization(),
            _ => static_minimizer(&mut sh),
        };
        let (ok, detail) = match out {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
