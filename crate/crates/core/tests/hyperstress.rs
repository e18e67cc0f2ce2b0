use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermomag::discretization::{DiscreteField, Mesh, SplineSpace};
use thermomag::hyperstress::*;
use thermomag::Error;

mod common;
use common::*;

#[test]
fn linear_field_on_interval_gives_two_fifteenths() {
    let mesh = Mesh::interval(0.0, 1.0, 4).unwrap();
    let op = GagliardoOperator::new(&mesh, 2, &kernel(0.25), &PairQuadrature::default()).unwrap();
    let e = energy_of(&op, &|x, _| x);
    assert!((e - 2.0 / 15.0).abs() < 1e-10 * (2.0 / 15.0), "{e}");
    let o = 0.25 * converged_oracle(1, 0.25, &|x, _| x);
    assert!((o - 2.0 / 15.0).abs() < 1e-9, "{o}");
}

#[test]
fn one_dimensional_energies_match_oracle() {
    for gamma in [0.25, 0.6] {
        let mesh = Mesh::interval(0.0, 1.0, 8).unwrap();
        let op = GagliardoOperator::new(&mesh, 3, &kernel(gamma), &PairQuadrature::default()).unwrap();
        for g in fields_1d() {
            let e = energy_of(&op, &*g);
            let o = 0.25 * converged_oracle(1, gamma, &*g);
            assert!((e - o).abs() <= 1e-6 * o, "gamma {gamma}: {e} vs {o}");
        }
    }
}

#[test]
fn two_dimensional_energies_match_oracle() {
    let gamma = 0.6;
    let mesh = Mesh::unit_square(4);
    let op = GagliardoOperator::new(&mesh, 3, &kernel(gamma), &PairQuadrature::default()).unwrap();
    for g in fields_2d() {
        let e = energy_of(&op, &*g);
        let o = 0.25 * converged_oracle(2, gamma, &*g);
        assert!((e - o).abs() <= 1e-5 * o, "{e} vs {o}");
    }
}

#[test]
fn far_pair_rule_matches_oracle_on_finer_mesh() {
    let gamma = 0.3;
    let mesh = Mesh::unit_square(8);
    let op = GagliardoOperator::new(&mesh, 3, &kernel(gamma), &PairQuadrature::default()).unwrap();
    let g = |x: f64, y: f64| x * x * x - 2.0 * y * y + x * y;
    let e = energy_of(&op, &g);
    let o = 0.25 * converged_oracle(2, gamma, &g);
    assert!((e - o).abs() <= 1e-4 * o, "{e} vs {o}");
}

fn small_op() -> GagliardoOperator {
    GagliardoOperator::new(&Mesh::unit_square(3), 2, &kernel(0.6), &PairQuadrature::default()).unwrap()
}

#[test]
fn constant_fields_have_zero_energy_and_force() {
    let op = small_op();
    let f = op.space.interpolate(8, |_| (0..8).map(|k| 0.3 * k as f64 - 1.1).collect());
    assert_eq!(gagliardo_energy(&op, &f).unwrap(), 0.0);
    let h = hyperstress_force(&op, &f).unwrap();
    assert!(h.values.iter().all(|v| v.abs() < 1e-12));
    let a = op.matrix();
    assert!((0..a.nrows()).all(|i| a.row(i).sum().abs() < 1e-12 * a[(i, i)].abs()));
}

fn random_field(op: &GagliardoOperator, ncomp: usize, rng: &mut ChaCha8Rng) -> NodalField {
    let n = op.space.len();
    NodalField { ncomp, values: (0..n * ncomp).map(|_| rng.random_range(-1.0..1.0)).collect() }
}

#[test]
fn energy_is_frame_indifferent() {
    let op = small_op();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = random_field(&op, 8, &mut rng);
    let e0 = gagliardo_energy(&op, &g).unwrap();
    let n = op.space.len();
    for _ in 0..5 {
        let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let q = [[t.cos(), -t.sin()], [t.sin(), t.cos()]];
        let mut r = NodalField::zeros(n, 8);
        for node in 0..n {
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let mut s = 0.0;
                        for a in 0..2 {
                            for b in 0..2 {
                                for c in 0..2 {
                                    s += q[i][a] * q[j][b] * q[k][c] * g.values[(4 * a + 2 * b + c) * n + node];
                                }
                            }
                        }
                        r.values[(4 * i + 2 * j + k) * n + node] = s;
                    }
                }
            }
        }
        let e1 = gagliardo_energy(&op, &r).unwrap();
        assert!((e1 - e0).abs() <= 1e-12 * e0, "{e0} {e1}");
    }
}

#[test]
fn hyperstress_is_the_derivative_of_the_energy() {
    let op = small_op();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = random_field(&op, 2, &mut rng);
    let hs = hyperstress_force(&op, &g).unwrap();
    let h = 1e-5;
    for _ in 0..10 {
        let dg = random_field(&op, 2, &mut rng);
        let ep = gagliardo_energy(&op, &g.axpby(1.0, &dg, h)).unwrap();
        let em = gagliardo_energy(&op, &g.axpby(1.0, &dg, -h)).unwrap();
        let fd = (ep - em) / (2.0 * h);
        let an = op.pairing(&hs, &dg).unwrap();
        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-8), "{fd} {an}");
    }
}

#[test]
fn hyperstress_is_linear() {
    let op = small_op();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g1 = random_field(&op, 1, &mut rng);
    let g2 = random_field(&op, 1, &mut rng);
    let (a, b) = (0.7, -2.3);
    let lhs = hyperstress_force(&op, &g1.axpby(a, &g2, b)).unwrap();
    let h1 = hyperstress_force(&op, &g1).unwrap();
    let h2 = hyperstress_force(&op, &g2).unwrap();
    let rhs = h1.axpby(a, &h2, b);
    let scale = rhs.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (x, y) in lhs.values.iter().zip(&rhs.values) {
        assert!((x - y).abs() <= 1e-12 * scale);
    }
}

#[test]
fn pair_matrix_is_bit_symmetric_and_energy_nonnegative() {
    let op = small_op();
    let a = op.matrix();
    assert_eq!(a, &a.transpose());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let g = random_field(&op, 1, &mut rng);
        assert!(gagliardo_energy(&op, &g).unwrap() > 0.0);
    }
}

#[test]
fn hessian_form_reproduces_sampled_energy() {
    let mesh = Mesh::unit_square(3);
    let op = GagliardoOperator::new(&mesh, 3, &kernel(0.6), &PairQuadrature::default()).unwrap();
    let space = Arc::new(SplineSpace::new(mesh, 3).unwrap());
    let chi = DiscreteField::project(space.clone(), 2, |x| {
        vec![x[0] + 0.1 * x[0] * x[0] * x[1], x[1] - 0.2 * x[1] * x[1] * x[1] + 0.05 * x[0] * x[0]]
    })
    .unwrap();
    let g = op.sample_hessian(&space, &chi.coeffs).unwrap();
    let e = gagliardo_energy(&op, &g).unwrap();
    let b = op.hessian_form(&space).unwrap();
    let n = space.len();
    let mut q = 0.0;
    for i in 0..2 {
        let c = nalgebra::DVector::from_column_slice(&chi.coeffs[i * n..(i + 1) * n]);
        q += 0.5 * c.dot(&(&b * &c));
    }
    assert!((q - e).abs() <= 1e-10 * e, "{q} {e}");
}

#[test]
fn too_few_radial_levels_are_reported() {
    let quad = PairQuadrature { levels: 2, ..PairQuadrature::default() };
    let err = GagliardoOperator::new(&Mesh::unit_square(2), 2, &kernel(0.9), &quad).unwrap_err();
    assert!(matches!(err, Error::QuadratureDivergence(_)), "{err:?}");
}

#[test]
fn kernel_has_the_singular_lower_bound_and_cutoff() {
    let k = KernelSpec { gamma: 0.6, strength: 2.0, cutoff_radius: 0.5 };
    for r in [1e-4, 1e-2, 0.1, 0.25] {
        assert!((k.eval(r, 2) - 2.0 * r.powf(-3.2)).abs() < 1e-12 * k.eval(r, 2));
    }
    assert!(k.eval(0.4, 2) < 2.0 * 0.4f64.powf(-3.2));
    assert_eq!(k.eval(0.5, 2), 0.0);
    assert!(k.validate(2).is_ok());
    assert!(KernelSpec { gamma: -0.1, ..k }.validate(2).is_err());
}

#[test]
fn healey_kromer_matches_grid_search() {
    let v = healey_kromer_eta(0.5, 1.0, 10.0, 0.6, 2).unwrap();
    assert!((v - 0.5443).abs() < 1e-4, "{v}");
    assert_eq!(healey_kromer_eta(0.0, 3.0, 10.0, 0.6, 2).unwrap(), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..20 {
        let d = if rng.random_bool(0.5) { 1 } else { 2 };
        let gamma = rng.random_range(0.1..0.95);
        let alpha = gamma - (d as f64 / 2.0 - 1.0);
        let p = d as f64 / alpha * rng.random_range(1.2..6.0);
        let c = rng.random_range(0.0..3.0);
        let m = rng.random_range(0.1..5.0);
        let v = healey_kromer_eta(c, m, p, gamma, d).unwrap();
        let o = grid_search_eta(c * m.powf(alpha / d as f64), p * alpha / d as f64);
        assert!((v - o).abs() < 1e-8, "{v} {o}");
    }
}

#[test]
fn healey_kromer_rejects_bad_exponents_and_is_monotone() {
    assert!(matches!(healey_kromer_eta(1.0, 1.0, 2.0, 0.6, 2), Err(Error::InvalidExponents(_))));
    assert!(matches!(healey_kromer_eta(1.0, 1.0, 10.0, -0.1, 2), Err(Error::InvalidExponents(_))));
    let mut last = f64::INFINITY;
    for c in [0.0, 0.1, 0.5, 1.0, 2.0] {
        let v = healey_kromer_eta(c, 1.5, 10.0, 0.6, 2).unwrap();
        assert!(v <= last);
        last = v;
    }
    let mut last = f64::INFINITY;
    for m in [0.1, 0.5, 1.0, 2.0] {
        let v = healey_kromer_eta(0.7, m, 10.0, 0.6, 2).unwrap();
        assert!(v <= last);
        last = v;
    }
}

fn chi_field(mesh: Mesh, f: impl Fn([f64; 2]) -> Vec<f64>) -> DiscreteField {
    let space = Arc::new(SplineSpace::new(mesh, 3).unwrap());
    DiscreteField::project(space, 2, f).unwrap()
}

#[test]
fn determinant_monitor_cases() {
    let id = chi_field(Mesh::unit_square(4), |x| vec![x[0], x[1]]);
    let (j, _) = min_determinant_monitor(&id);
    assert!((j - 1.0).abs() < 1e-12);
    let aff = chi_field(Mesh::unit_square(4), |x| vec![2.0 * x[0], 0.5 * x[1]]);
    assert!((min_determinant_monitor(&aff).0 - 1.0).abs() < 1e-12);
    let fold = chi_field(Mesh::rect([-1.0, 0.0], [1.0, 1.0], [4, 2]).unwrap(), |x| vec![x[0] * x[0], x[1]]);
    let (j, at) = min_determinant_monitor(&fold);
    assert!(j < 0.0 && at[0] < 0.0);
    let b = estimate_bound_inputs(&id, 10.0, 0.6);
    assert!(b.c_alpha < 1e-10 && (b.m_int - 1.0).abs() < 1e-10, "{b:?}");
    assert!((b.eta.unwrap() - 1.0).abs() < 1e-10);
}
