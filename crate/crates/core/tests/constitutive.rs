use std::sync::Arc;

use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermomag::constitutive::tensor::{flat, rotation};
use thermomag::constitutive::*;
use thermomag::Error;

// ---------- test-only model pieces ----------

#[derive(Debug)]
struct NoPhi;

impl MechanicalEnergy for NoPhi {
    fn value(&self, _: &Mat2, _: &Vec2, _: f64) -> f64 {
        0.0
    }
    fn grad_f(&self, _: &Mat2, _: &Vec2, _: f64) -> Mat2 {
        Mat2::zeros()
    }
    fn grad_m(&self, _: &Mat2, _: &Vec2, _: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn grad_z(&self, _: &Mat2, _: &Vec2, _: f64) -> f64 {
        0.0
    }
    fn hess_f(&self, _: &Mat2, _: &Vec2, _: f64) -> Matrix4<f64> {
        Matrix4::zeros()
    }
    fn hess_mz(&self, _: &Mat2, _: &Vec2, _: f64) -> Matrix3<f64> {
        Matrix3::zeros()
    }
}

#[derive(Debug)]
struct HalfSquare;

impl VolumetricEnergy for HalfSquare {
    fn value(&self, j: f64) -> f64 {
        if j <= 0.0 {
            f64::INFINITY
        } else {
            0.5 * (j - 1.0).powi(2)
        }
    }
    fn d1(&self, j: f64) -> f64 {
        j - 1.0
    }
    fn d2(&self, _: f64) -> f64 {
        1.0
    }
    fn exponent(&self) -> f64 {
        0.0
    }
    fn blowup_coefficient(&self) -> f64 {
        0.0
    }
}

/// ψ_th = −aθ²/2 − bθ + k θ³ (k > 0 makes it convex for large θ).
#[derive(Debug)]
struct Poly {
    a: f64,
    b: f64,
    k: f64,
}

impl ThermalEnergy for Poly {
    fn value(&self, _: &Vec2, _: f64, t: f64) -> f64 {
        -0.5 * self.a * t * t - self.b * t + self.k * t * t * t
    }
    fn d_theta(&self, _: &Vec2, _: f64, t: f64) -> f64 {
        -self.a * t - self.b + 3.0 * self.k * t * t
    }
    fn d2_theta(&self, _: &Vec2, _: f64, t: f64) -> f64 {
        -self.a + 6.0 * self.k * t
    }
    fn grad_mz(&self, _: &Vec2, _: f64, _: f64) -> Vector3<f64> {
        Vector3::zeros()
    }
    fn grad_mz_theta(&self, _: &Vec2, _: f64, _: f64) -> Vector3<f64> {
        Vector3::zeros()
    }
    fn hess_mz(&self, _: &Vec2, _: f64, _: f64) -> Matrix3<f64> {
        Matrix3::zeros()
    }
    fn slope_at_zero(&self, _: &Vec2, _: f64) -> f64 {
        -self.b
    }
}

fn pure_log(c: f64) -> MaterialModel {
    BundledParams { heat_capacity: c, lambda_m: 0.0, lambda_z: 0.0, ..Default::default() }.build().unwrap()
}

fn random_f(rng: &mut ChaCha8Rng) -> Mat2 {
    loop {
        let f = Mat2::identity() + Mat2::from_fn(|_, _| rng.random_range(-0.4..0.4));
        if f.determinant() > 0.2 {
            return f;
        }
    }
}

fn random_m(rng: &mut ChaCha8Rng) -> Vec2 {
    Vec2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5))
}

// ---------- eval_bulk_energy ----------

#[test]
fn ground_state_energy_is_the_model_constant() {
    let model = bundled_model();
    let e = eval_bulk_energy(&model, &Mat2::identity(), &Vec2::zeros(), model.zeta_ref, 0.0);
    assert!((e - model.ground_energy).abs() < 1e-15);
    assert!(model.ground_energy > 0.0);
}

#[test]
fn non_positive_determinant_gives_infinite_energy() {
    let model = bundled_model();
    let f = Mat2::new(1.0, 0.0, 0.0, -0.1);
    assert_eq!(eval_bulk_energy(&model, &f, &Vec2::zeros(), 0.5, 1.0), f64::INFINITY);
    assert_eq!(eval_bulk_energy(&model, &Mat2::new(1.0, 1.0, 1.0, 1.0), &Vec2::zeros(), 0.5, 1.0), f64::INFINITY);
    assert!(matches!(eval_stress(&model, &f, &Vec2::zeros(), 0.5), Err(Error::DegenerateDeformation { .. })));
}

#[test]
fn frame_indifference_on_random_samples() {
    let model = bundled_model();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let f = random_f(&mut rng);
        let q = rotation(rng.random_range(0.0..std::f64::consts::TAU));
        let m = random_m(&mut rng);
        let z = rng.random_range(-1.0..2.0);
        let t = rng.random_range(0.0..50.0);
        let a = eval_bulk_energy(&model, &f, &m, z, t);
        let b = eval_bulk_energy(&model, &(q * f), &m, z, t);
        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} {b}");
    }
}

// ---------- eval_stress ----------

#[test]
fn reference_state_is_stress_free() {
    let model = bundled_model();
    let s = eval_stress(&model, &Mat2::identity(), &Vec2::new(0.3, -0.2), model.zeta_ref).unwrap();
    assert!(s.amax() < 1e-15);
}

#[test]
fn stress_matches_central_differences() {
    let model = bundled_model();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let f = random_f(&mut rng);
        let m = random_m(&mut rng);
        let z = rng.random_range(0.0..1.0);
        let dir = Mat2::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let h = 1e-5;
        let fd = (model.psi_me(&(f + dir * h), &m, z) - model.psi_me(&(f - dir * h), &m, z)) / (2.0 * h);
        let an = eval_stress(&model, &f, &m, z).unwrap().component_mul(&dir).sum();
        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "{fd} {an}");
    }
}

#[test]
fn stress_tangent_and_mz_hessian_match_differences() {
    let model = bundled_model();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-6;
    for _ in 0..10 {
        let f = random_f(&mut rng);
        let m = random_m(&mut rng);
        let z = rng.random_range(0.0..1.0);
        let t = rng.random_range(0.1..5.0);
        let tan = model.stress_tangent(&f, &m, z).unwrap();
        for k in 0..4 {
            let mut e = Mat2::zeros();
            e[(k / 2, k % 2)] = h;
            let d = (flat(&model.stress(&(f + e), &m, z).unwrap()) - flat(&model.stress(&(f - e), &m, z).unwrap()))
                / (2.0 * h);
            assert!((d - tan.column(k)).amax() < 1e-6 * (1.0 + tan.amax()));
        }
        let hm = model.hess_mz(&f, &m, z, t);
        for k in 0..3 {
            let (mut mp, mut mm, mut zp, mut zm) = (m, m, z, z);
            if k < 2 {
                mp[k] += h;
                mm[k] -= h;
            } else {
                zp += h;
                zm -= h;
            }
            let d = (model.grad_mz(&f, &mp, zp, t) - model.grad_mz(&f, &mm, zm, t)) / (2.0 * h);
            assert!((d - hm.column(k)).amax() < 1e-6 * (1.0 + hm.amax()));
        }
        // ∂_(m,ζ)ψ against differences of the full bulk energy
        let g = model.grad_mz(&f, &m, z, t);
        let dm = (eval_bulk_energy(&model, &f, &(m + Vec2::new(h, 0.0)), z, t)
            - eval_bulk_energy(&model, &f, &(m - Vec2::new(h, 0.0)), z, t))
            / (2.0 * h);
        let dz = (eval_bulk_energy(&model, &f, &m, z + h, t) - eval_bulk_energy(&model, &f, &m, z - h, t)) / (2.0 * h);
        assert!((dm - g[0]).abs() < 1e-6 * (1.0 + g[0].abs()));
        assert!((dz - g[2]).abs() < 1e-6 * (1.0 + g[2].abs()));
    }
}

#[test]
fn pure_volumetric_model_stress() {
    let mut model = bundled_model();
    model.phi = Arc::new(NoPhi);
    model.xi0 = Arc::new(HalfSquare);
    let s = eval_stress(&model, &Mat2::new(2.0, 0.0, 0.0, 1.0), &Vec2::zeros(), 0.0).unwrap();
    assert!((s - Mat2::new(1.0, 0.0, 0.0, 2.0)).amax() < 1e-15);
}

// ---------- pull_back_tensor ----------

#[test]
fn pull_back_examples() {
    assert_eq!(pull_back_tensor(&Mat2::identity(), &Mat2::identity()).unwrap(), Mat2::identity());
    let t = pull_back_tensor(&Mat2::new(2.0, 0.0, 0.0, 1.0), &Mat2::identity()).unwrap();
    assert!((t - Mat2::new(0.5, 0.0, 0.0, 2.0)).amax() < 1e-15);
    assert!(pull_back_tensor(&Mat2::new(-1.0, 0.0, 0.0, 1.0), &Mat2::identity()).is_err());
}

#[test]
fn pull_back_preserves_symmetry_and_definiteness() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let a = Mat2::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let spd = a * a.transpose() + Mat2::identity() * 1e-3;
        let f = random_f(&mut rng);
        let t = pull_back_tensor(&f, &spd).unwrap();
        assert_eq!(t[(0, 1)], t[(1, 0)]);
        assert!(t.symmetric_eigenvalues().min() > 0.0);
    }
}

#[test]
fn dissipation_is_nonnegative() {
    let model = bundled_model();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let f = random_f(&mut rng);
        let m = random_m(&mut rng);
        let (z, t) = (rng.random_range(-1.0..2.0), rng.random_range(0.0..10.0));
        let mdot = random_m(&mut rng);
        let zdot: f64 = rng.random_range(-3.0..3.0);
        let gmu = random_m(&mut rng);
        let gth = random_m(&mut rng);
        let mm = model.mobility(&f, &m, z, t).unwrap();
        let kk = model.conductivity(&f, &m, z, t).unwrap();
        let d =
            model.tau1 * mdot.norm_squared() + model.tau2 * zdot * zdot + gmu.dot(&(mm * gmu)) + gth.dot(&(kk * gth));
        assert!(d >= -1e-14);
    }
}

// ---------- thermal_closure ----------

#[test]
fn closure_of_the_pure_log_model() {
    let c = 2.5;
    let model = pure_log(c);
    let m = Vec2::new(0.2, 0.1);
    for t in [0.1, 1.0, 7.0] {
        let st = thermal_closure(&model, &m, 0.3, t);
        assert!((st.s - c * t.ln()).abs() < 1e-13);
        assert!((st.w - c * t).abs() < 1e-12);
        assert!((st.cv - c).abs() < 1e-13);
    }
    let st0 = thermal_closure(&bundled_model(), &m, 0.3, 0.0);
    assert_eq!(st0.w, bundled_model().thermal.value(&m, 0.3, 0.0));
}

#[test]
fn enthalpy_slope_is_heat_capacity() {
    let model = bundled_model();
    let m = Vec2::new(0.8, -0.4);
    for t in [0.05f64, 0.5, 1.0, 3.0, 40.0] {
        let h = 1e-5 * t.max(1.0);
        let fd = (model.e_th(&m, 0.9, t + h) - model.e_th(&m, 0.9, t - h)) / (2.0 * h);
        let cv = model.heat_capacity(&m, 0.9, t);
        assert!((fd - cv).abs() < 1e-6 * cv, "{fd} {cv}");
    }
}

#[test]
fn gibbs_relation() {
    let model = bundled_model();
    let f = Mat2::new(1.1, 0.05, -0.02, 0.95);
    let m = Vec2::new(0.4, 0.3);
    for t in [0.01, 0.5, 2.0, 20.0] {
        let st = thermal_closure(&model, &m, 0.7, t);
        let psi = eval_bulk_energy(&model, &f, &m, 0.7, t);
        let e = legendre_internal_energy(&model, &f, &m, 0.7, st.s);
        assert!((e - (psi + t * st.s)).abs() < 1e-12 * (1.0 + e.abs()), "{e} {}", psi + t * st.s);
    }
}

// ---------- invert_enthalpy ----------

#[test]
fn enthalpy_inversion() {
    let c = 1.7;
    let model = pure_log(c);
    let m = Vec2::zeros();
    assert!((invert_enthalpy(&model, &m, 0.5, 3.0 * c).unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(invert_enthalpy(&model, &m, 0.5, 0.0).unwrap(), 0.0);
    assert!(matches!(invert_enthalpy(&model, &m, 0.5, -1.0), Err(Error::OutOfRange(_))));

    let model = bundled_model();
    let m = Vec2::new(1.0, 0.5);
    let mut last = -1.0;
    for k in 0..=200 {
        let t = 100.0 * (k as f64 / 200.0).powi(2);
        let w = thermal_closure(&model, &m, 0.2, t).w;
        let back = invert_enthalpy(&model, &m, 0.2, w).unwrap();
        assert!((back - t).abs() <= 1e-10 * (1.0 + t), "{t} {back}");
        assert!(back >= last);
        last = back;
    }
}

// ---------- legendre_internal_energy ----------

#[test]
fn legendre_transform_of_the_log_model() {
    let c = 1.3;
    let model = pure_log(c);
    let m = Vec2::zeros();
    for s in [-5.0, -1.0, 0.0, 0.7, 3.0] {
        let e = legendre_thermal(&model, &m, 0.5, s);
        assert!((e - c * (s / c).exp()).abs() < 1e-12 * (1.0 + e), "{s}");
    }
    let f = Mat2::identity();
    let full = legendre_internal_energy(&model, &f, &m, 0.5, 0.4);
    assert!((full - model.ground_energy - c * (0.4f64 / c).exp()).abs() < 1e-12);
}

#[test]
fn below_entropy_floor_is_infinite() {
    let mut model = bundled_model();
    model.thermal = Arc::new(Poly { a: 2.0, b: 0.5, k: 0.0 });
    let m = Vec2::zeros();
    // s = 2θ + 0.5, floor 0.5
    assert_eq!(entropy_floor(&model, &m, 0.0), 0.5);
    assert_eq!(legendre_thermal(&model, &m, 0.0, 0.3), f64::INFINITY);
    assert_eq!(temperature_at_entropy(&model, &m, 0.0, 0.5).unwrap(), 0.0);
    assert!((temperature_at_entropy(&model, &m, 0.0, 4.5).unwrap() - 2.0).abs() < 1e-12);
    assert!(matches!(temperature_at_entropy(&model, &m, 0.0, 0.2), Err(Error::OutOfRange(_))));
}

#[test]
fn legendre_transform_is_convex_in_entropy() {
    let model = bundled_model();
    let f = Mat2::new(1.05, 0.0, 0.1, 1.0);
    let m = Vec2::new(0.5, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let (s1, s2) = (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
        let l: f64 = rng.random_range(0.01..0.99);
        let e = |s: f64| legendre_internal_energy(&model, &f, &m, 0.6, s);
        assert!(e(l * s1 + (1.0 - l) * s2) <= l * e(s1) + (1.0 - l) * e(s2) + 1e-10);
    }
}

// ---------- check_assumptions ----------

#[test]
fn bundled_model_passes_every_check() {
    let report = check_assumptions(&bundled_model(), &SampleSpec::default());
    assert!(report.all_passed(), "{:?}", report.failed());
    // the 0+ slope entry documents the c_v lower bound trade-off
    assert!(!report.get("entropy_floor_finite").unwrap().passed);
}

#[test]
fn convex_thermal_energy_fails_concavity() {
    let mut model = bundled_model();
    model.thermal = Arc::new(Poly { a: 1.0, b: 0.0, k: 1.0 });
    let report = check_assumptions(&model, &SampleSpec::default());
    assert!(report.failed().contains(&"entropy_concavity"));
}

#[test]
fn indefinite_mobility_fails_positivity() {
    let mut model = bundled_model();
    model.transport =
        Arc::new(ConstantTransport { mobility: Mat2::new(1.0, 0.0, 0.0, -1.0), conductivity: Mat2::identity() });
    let report = check_assumptions(&model, &SampleSpec::default());
    assert_eq!(report.failed(), vec!["mobility_spd"]);
}
