//! Oracles shared by the module tests and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermomag::discretization::{DiscreteField, Mesh, SplineSpace};
use thermomag::dynamics::{initial_state, DynamicProblem, StateVector};
use thermomag::hyperstress::*;
use thermomag::linalg::gauss_on;
use thermomag::magnetostatics::*;
use thermomag::statics::{ground_state, StaticProblem, StaticState};

pub fn kernel(gamma: f64) -> KernelSpec {
    KernelSpec { gamma, strength: 1.0, cutoff_radius: f64::INFINITY }
}

/// ∬_{Ω×Ω} |x−y|^{−(d+2γ)} |g(x)−g(y)|² on the unit interval or square,
/// in the difference variable z = y − x with polar coordinates and the
/// radial map r = R t^{1/(2−2γ)}, which removes the singularity.
pub fn oracle(d: usize, gamma: f64, g: &dyn Fn(f64, f64) -> f64, n: usize) -> f64 {
    let e = d as f64 + 2.0 * gamma;
    let m = 1.0 / (2.0 - 2.0 * gamma);
    let (xg, xw) = gauss_on(8, 0.0, 1.0);
    // P(z) = ∫_{Ω∩(Ω−z)} |g(x+z)−g(x)|², exact for polynomial g
    let p = |z0: f64, z1: f64| -> f64 {
        let (a0, b0) = (0f64.max(-z0), 1f64.min(1.0 - z0));
        let (a1, b1) = if d == 2 { (0f64.max(-z1), 1f64.min(1.0 - z1)) } else { (0.0, 1.0) };
        let mut s = 0.0;
        for (u, wu) in xg.iter().zip(&xw) {
            let x0 = a0 + (b0 - a0) * u;
            let ys: Vec<(f64, f64)> = if d == 2 {
                xg.iter().zip(&xw).map(|(v, wv)| (a1 + (b1 - a1) * v, wv * (b1 - a1))).collect()
            } else {
                vec![(0.0, 1.0)]
            };
            for (x1, w1) in ys {
                let diff = g(x0 + z0, x1 + z1) - g(x0, x1);
                s += wu * (b0 - a0) * w1 * diff * diff;
            }
        }
        s
    };
    let (tg, tw) = gauss_on(n, 0.0, 1.0);
    if d == 1 {
        // z ∈ (0, 1), doubled for z < 0
        let mut s = 0.0;
        for (t, w) in tg.iter().zip(&tw) {
            let r = t.powf(m);
            let dr = m * t.powf(m - 1.0);
            s += w * dr * r.powf(-e) * p(r, 0.0);
        }
        return 2.0 * s;
    }
    // half plane z1 ≥ 0 split into four angular sectors with a kink-free radius
    let sectors = [
        (0.0, std::f64::consts::FRAC_PI_4),
        (std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2),
        (std::f64::consts::FRAC_PI_2, 3.0 * std::f64::consts::FRAC_PI_4),
        (3.0 * std::f64::consts::FRAC_PI_4, std::f64::consts::PI),
    ];
    let mut s = 0.0;
    for (a, b) in sectors {
        let (ag, aw) = gauss_on(n, a, b);
        for (th, wth) in ag.iter().zip(&aw) {
            let (c, sn) = (th.cos(), th.sin());
            let rmax = 1.0 / c.abs().max(sn.abs());
            for (t, w) in tg.iter().zip(&tw) {
                let r = rmax * t.powf(m);
                let dr = rmax * m * t.powf(m - 1.0);
                s += wth * w * dr * r * r.powf(-e) * p(r * c, r * sn);
            }
        }
    }
    2.0 * s
}

/// Oracle with Richardson-style refinement: doubles n until two levels agree.
pub fn converged_oracle(d: usize, gamma: f64, g: &dyn Fn(f64, f64) -> f64) -> f64 {
    let mut n = 8;
    let mut prev = oracle(d, gamma, g, n);
    loop {
        n *= 2;
        let next = oracle(d, gamma, g, n);
        if (next - prev).abs() <= 1e-9 * next.abs() || n >= 256 {
            return next;
        }
        prev = next;
    }
}

pub fn energy_of(op: &GagliardoOperator, g: &dyn Fn(f64, f64) -> f64) -> f64 {
    let f = op.space.interpolate(1, |x| vec![g(x[0], x[1])]);
    gagliardo_energy(op, &f).unwrap()
}

pub fn fields_1d() -> Vec<Box<dyn Fn(f64, f64) -> f64>> {
    vec![
        Box::new(|x, _| x),
        Box::new(|x, _| x * x),
        Box::new(|x, _| x * x * x),
        Box::new(|x, _| 1.0 - 3.0 * x + x * x * x),
        Box::new(|x, _| x * x - 2.0 * x * x * x),
    ]
}

pub fn fields_2d() -> Vec<Box<dyn Fn(f64, f64) -> f64>> {
    vec![
        Box::new(|x, _| x),
        Box::new(|x, y| x * x + x * y),
        Box::new(|x, y| x * x * x - 2.0 * y * y + x * y),
        Box::new(|x, y| x * x * y * y * y),
        Box::new(|x, y| (1.0 - x) * y * (2.0 * x - y * y)),
    ]
}

pub fn grid_search_eta(a: f64, k: f64) -> f64 {
    let f = |e: f64| e - a * e.powf(k);
    let n = 20000;
    let mut best = 0;
    for i in 1..=n {
        if f(i as f64 / n as f64) > f(best as f64 / n as f64) {
            best = i;
        }
    }
    let (mut lo, mut hi) = (((best as f64) - 1.0).max(0.0) / n as f64, ((best + 1) as f64 / n as f64).min(1.0));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = hi - phi * (hi - lo);
        let d = lo + phi * (hi - lo);
        if f(c) > f(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    f(0.5 * (lo + hi))
}

/// Uniformly magnetized disk (m = e₁) of radius 1 at the origin, with cell
/// values weighted by the covered area fraction.
pub fn disk(grid: &SpatialGrid) -> Vec<[f64; 2]> {
    let h = grid.h();
    let s = 16;
    (0..grid.n_cells())
        .map(|c| {
            let z = grid.cell_center(c);
            let mut hit = 0;
            for a in 0..s {
                for b in 0..s {
                    let x = z[0] + ((a as f64 + 0.5) / s as f64 - 0.5) * h[0];
                    let y = z[1] + ((b as f64 + 0.5) / s as f64 - 0.5) * h[1];
                    if x * x + y * y < 1.0 {
                        hit += 1;
                    }
                }
            }
            [hit as f64 / (s * s) as f64, 0.0]
        })
        .collect()
}

pub fn disk_grid(margin: f64, cells: usize, bc: PotentialBoundary) -> SpatialGrid {
    SpatialGrid::around([-1.0, -1.0], [1.0, 1.0], margin, cells, 1.0, bc).unwrap()
}

pub fn disk_energy(grid: &SpatialGrid) -> PotentialSolution {
    solve_scalar_potential(&disk(grid), grid).unwrap()
}

pub fn field(mesh: Mesh, f: impl Fn([f64; 2]) -> Vec<f64>) -> DiscreteField {
    DiscreteField::project(Arc::new(SplineSpace::new(mesh, 3).unwrap()), 2, f).unwrap()
}

pub fn double_annulus() -> DiscreteField {
    // the strip (0,2)×(0,1) wrapped twice around the annulus 1 < r < 1.5
    let mesh = Mesh::rect([0.0, 0.0], [2.0, 1.0], [48, 4]).unwrap();
    field(mesh, |x| {
        let r = 1.5 - 0.5 * x[1];
        let t = 2.0 * PI * x[0];
        vec![r * t.cos(), r * t.sin()]
    })
}

/// Area of the annulus 1 < r < 1.5 by midpoint counting on a 2000² grid.
pub fn annulus_area() -> f64 {
    let n = 2000;
    let mut hit = 0usize;
    for i in 0..n {
        for j in 0..n {
            let x = -1.5 + 3.0 * (i as f64 + 0.5) / n as f64;
            let y = -1.5 + 3.0 * (j as f64 + 0.5) / n as f64;
            let rr = (x * x + y * y).sqrt();
            if rr > 1.0 && rr < 1.5 {
                hit += 1;
            }
        }
    }
    hit as f64 * 9.0 / (n * n) as f64
}

/// Largest relative error between central differences of `f` at `u` and
/// the directional derivatives from `grad`, over 20 random directions.
pub fn fd_worst<F: Fn(&[f64]) -> f64>(f: F, grad: &[f64], u: &[f64], seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let dir: Vec<f64> = (0..u.len()).map(|_| rng.random::<f64>() - 0.5).collect();
        let up: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + h * b).collect();
        let um: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a - h * b).collect();
        let fd = (f(&up) - f(&um)) / (2.0 * h);
        let an: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();
        worst = worst.max((fd - an).abs() / an.abs().max(1e-8));
    }
    worst
}

/// Admissible dynamic state with every block perturbed.
pub fn random_state(p: &DynamicProblem, seed: u64) -> StateVector {
    let mut st = initial_state(p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jiggle = |v: &mut Vec<f64>, s: f64| v.iter_mut().for_each(|x| *x += s * (rng.random::<f64>() - 0.5));
    jiggle(&mut st.chi, 0.04);
    jiggle(&mut st.m, 0.4);
    jiggle(&mut st.zeta, 0.1);
    jiggle(&mut st.theta, 0.2);
    st.t = 0.3;
    st
}

/// A feasible perturbation of the static ground state that keeps Γ_D fixed.
pub fn perturbed(p: &StaticProblem, seed: u64, size: f64) -> StaticState {
    let mut st = ground_state(p, 1.0);
    let n = p.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clamped = p.clamped();
    for i in 0..2 * n {
        if !clamped.contains(&i) {
            st.chi[i] += size * 0.05 * (rng.random::<f64>() - 0.5);
        }
    }
    for v in st.m.iter_mut() {
        *v += size * (rng.random::<f64>() - 0.5);
    }
    for v in st.zeta.iter_mut() {
        *v += size * 0.2 * (rng.random::<f64>() - 0.5);
    }
    for v in st.s.iter_mut() {
        *v += size * 0.2 * (rng.random::<f64>() - 0.5);
    }
    st
}
