//! Sampled check of the structural inequalities the analysis relies on.

use serde::{Deserialize, Serialize};

use super::model::MaterialModel;
use super::tensor::{Mat2, Vec2};

/// Sampling grid and the constants the inequalities are checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub thetas: Vec<f64>,
    pub magnetizations: Vec<[f64; 2]>,
    pub zetas: Vec<f64>,
    pub determinants: Vec<f64>,
    /// Lower bound ε for c_v.
    pub cv_min: f64,
    /// Common upper bound C for the bounded quantities.
    pub bound: f64,
    /// Decay excess ε in |∂_m c_v| ≤ C/(1+θ)^{1+ε}.
    pub decay_eps: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        let thetas = [0.0, 1e-6, 1e-3, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1e3, 1e4, 1e5].to_vec();
        let mut magnetizations = vec![];
        for r in [0.0, 0.3, 1.0, 3.0, 10.0] {
            for k in 0..6 {
                let a = k as f64 * std::f64::consts::PI / 3.0 + 0.1;
                magnetizations.push([r * a.cos(), r * a.sin()]);
            }
        }
        SampleSpec {
            thetas,
            magnetizations,
            zetas: vec![-2.0, -0.5, 0.0, 0.5, 1.0, 3.0],
            determinants: vec![1e-3, 0.01, 0.1, 0.5, 0.9, 1.0, 1.1, 2.0, 5.0],
            cv_min: 1e-3,
            bound: 1e2,
            decay_eps: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub description: String,
    pub passed: bool,
    /// Informational entries do not affect [`AssumptionReport::all_passed`].
    pub informational: bool,
    pub worst_value: f64,
    pub worst_point: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub model: String,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.informational)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed && !c.informational).map(|c| c.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tracker {
    name: &'static str,
    description: &'static str,
    informational: bool,
    worst: f64,
    point: String,
    /// true: larger values are worse (the check is value ≤ limit).
    upper: bool,
    limit: f64,
}

impl Tracker {
    fn new(name: &'static str, description: &'static str, upper: bool, limit: f64) -> Tracker {
        Tracker {
            name,
            description,
            informational: false,
            worst: if upper { f64::NEG_INFINITY } else { f64::INFINITY },
            point: String::new(),
            upper,
            limit,
        }
    }

    fn see(&mut self, v: f64, point: impl FnOnce() -> String) {
        let worse = if v.is_nan() {
            true
        } else if self.upper {
            v > self.worst
        } else {
            v < self.worst
        };
        if worse && !self.worst.is_nan() {
            self.worst = v;
            self.point = point();
        }
    }

    fn finish(self) -> AssumptionCheck {
        let passed =
            !self.worst.is_nan() && if self.upper { self.worst <= self.limit } else { self.worst > self.limit };
        AssumptionCheck {
            name: self.name.into(),
            description: self.description.into(),
            passed,
            informational: self.informational,
            worst_value: self.worst,
            worst_point: self.point,
        }
    }
}

fn min_eig(t: &Mat2) -> f64 {
    let tr = t.trace();
    let det = t.determinant();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    0.5 * tr - disc
}

/// Evaluates every sampled inequality and records the worst sample point.
pub fn check_assumptions(model: &MaterialModel, spec: &SampleSpec) -> AssumptionReport {
    let th = &model.thermal;
    let c = spec.bound;
    let mut concave = Tracker::new("entropy_concavity", "-d2psi/dtheta2 > 0", false, 0.0);
    let mut cv_lo = Tracker::new("heat_capacity_lower", "c_v >= eps", false, spec.cv_min);
    let mut cv_hi = Tracker::new("heat_capacity_upper", "c_v <= C", true, c);
    let mut dpsi = Tracker::new("thermal_gradient_bound", "|d_(m,zeta) psi_th| <= C", true, c);
    let mut cross = Tracker::new("thermal_cross_decay", "|d2_(m,zeta)theta psi_th| (1+theta) <= C", true, c);
    let mut dcv = Tracker::new("heat_capacity_decay", "|d_(m,zeta) c_v| (1+theta)^(1+eps) <= C", true, c);
    let mut mob = Tracker::new("mobility_spd", "spatial mobility symmetric positive definite", false, 0.0);
    let mut cond = Tracker::new("conductivity_spd", "spatial conductivity symmetric positive definite", false, 0.0);
    let mut slope0 = Tracker::new(
        "entropy_floor_finite",
        "lim theta->0+ dpsi/dtheta <= C (incompatible with c_v >= eps > 0)",
        true,
        c,
    );
    slope0.informational = true;

    for mm in &spec.magnetizations {
        let m = Vec2::new(mm[0], mm[1]);
        for &z in &spec.zetas {
            slope0.see(th.slope_at_zero(&m, z), || format!("m={mm:?} zeta={z}"));
            for &t in &spec.thetas {
                let at = || format!("m={mm:?} zeta={z} theta={t}");
                if t > 0.0 {
                    concave.see(-th.d2_theta(&m, z, t), at);
                }
                let cv = th.heat_capacity(&m, z, t);
                cv_lo.see(cv, at);
                cv_hi.see(cv, at);
                dpsi.see(th.grad_mz(&m, z, t).amax(), at);
                cross.see(th.grad_mz_theta(&m, z, t).amax() * (1.0 + t), at);
                dcv.see(th.heat_capacity_grad(&m, z, t).amax() * (1.0 + t).powf(1.0 + spec.decay_eps), at);
                let ms = model.transport.mobility(&m, z, t);
                let ks = model.transport.conductivity(&m, z, t);
                let sym = |a: &Mat2| (a[(0, 1)] - a[(1, 0)]).abs() <= 1e-14 * a.amax().max(1.0);
                mob.see(if sym(&ms) { min_eig(&ms) } else { f64::NEG_INFINITY }, at);
                cond.see(if sym(&ks) { min_eig(&ks) } else { f64::NEG_INFINITY }, at);
            }
        }
    }

    let xi = &model.xi0;
    let q = xi.exponent();
    let mut blow =
        Tracker::new("volumetric_blowup", "xi0(J) J^q >= eps for J > 0 and xi0 = inf for J <= 0", false, 0.0);
    for &j in &spec.determinants {
        blow.see(xi.value(j) * j.powf(q) - xi.blowup_coefficient(), || format!("J={j}"));
    }
    for j in [0.0, -0.5] {
        blow.see(if xi.value(j).is_infinite() { 1.0 } else { -1.0 }, || format!("J={j}"));
    }
    let mut conv = Tracker::new("volumetric_convexity", "xi0''(J) >= 0", false, -1e-12);
    for &j in &spec.determinants {
        conv.see(xi.d2(j), || format!("J={j}"));
    }
    let gamma = model.exponents.gamma;
    let d = 2.0;
    let mut expo = Tracker::new("volumetric_exponent", "q > 2d/(2 gamma + 2 - d)", false, 0.0);
    expo.see(q - 2.0 * d / (2.0 * gamma + 2.0 - d), || format!("q={q} gamma={gamma}"));

    AssumptionReport {
        model: model.name.clone(),
        checks: vec![
            concave.finish(),
            cv_lo.finish(),
            cv_hi.finish(),
            dpsi.finish(),
            cross.finish(),
            dcv.finish(),
            mob.finish(),
            cond.finish(),
            blow.finish(),
            conv.finish(),
            expo.finish(),
            slope0.finish(),
        ],
    }
}
