use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thermomag::discretization::Mesh;
use thermomag::hyperstress::{gagliardo_energy, GagliardoOperator, KernelSpec, NodalField, PairQuadrature};
use thermomag::linalg::gauss_on;

use crate::artifacts::Artifacts;
use crate::config::RunConfig;
use crate::error::CliError;

const TOL_ORACLE: f64 = 1e-4;
const TOL_EXACT: f64 = 1e-12;

type Field = fn(f64, f64) -> f64;

/// Test fields with their largest degree in any one variable.
const FIELDS_1D: [(&str, usize, Field); 5] = [
    ("x", 1, |x, _| x),
    ("x^2", 2, |x, _| x * x),
    ("x^3", 3, |x, _| x * x * x),
    ("1-3x+x^3", 3, |x, _| 1.0 - 3.0 * x + x * x * x),
    ("x^2-2x^3", 3, |x, _| x * x - 2.0 * x * x * x),
];

const FIELDS_2D: [(&str, usize, Field); 5] = [
    ("x", 1, |x, _| x),
    ("x^2+xy", 2, |x, y| x * x + x * y),
    ("x^2-y^2+xy", 2, |x, y| x * x - y * y + x * y),
    ("x^3-2y^2+xy", 3, |x, y| x * x * x - 2.0 * y * y + x * y),
    ("x^2y-xy^3/3", 3, |x, y| x * x * y - x * y * y * y / 3.0),
];

/// ¼∬ k(|x−y|)|g(x)−g(y)|² over the unit interval or square, in the
/// difference variable with polar coordinates and the radial map
/// r = R t^{1/(2−2γ)}, which removes the singularity.
fn reference(k: &KernelSpec, d: usize, g: Field, n: usize) -> f64 {
    let m = 1.0 / (2.0 - 2.0 * k.gamma);
    let (xg, xw) = gauss_on(8, 0.0, 1.0);
    let overlap = |z0: f64, z1: f64| -> f64 {
        let (a0, b0) = (0f64.max(-z0), 1f64.min(1.0 - z0));
        let (a1, b1) = if d == 2 { (0f64.max(-z1), 1f64.min(1.0 - z1)) } else { (0.0, 1.0) };
        let mut s = 0.0;
        for (u, wu) in xg.iter().zip(&xw) {
            let x0 = a0 + (b0 - a0) * u;
            if d == 1 {
                let diff = g(x0 + z0, 0.0) - g(x0, 0.0);
                s += wu * (b0 - a0) * diff * diff;
                continue;
            }
            for (v, wv) in xg.iter().zip(&xw) {
                let x1 = a1 + (b1 - a1) * v;
                let diff = g(x0 + z0, x1 + z1) - g(x0, x1);
                s += wu * (b0 - a0) * wv * (b1 - a1) * diff * diff;
            }
        }
        s
    };
    let (tg, tw) = gauss_on(n, 0.0, 1.0);
    let mut s = 0.0;
    if d == 1 {
        for (t, w) in tg.iter().zip(&tw) {
            let r = t.powf(m);
            s += w * m * t.powf(m - 1.0) * k.eval(r, 1) * overlap(r, 0.0);
        }
    } else {
        for (a, b) in [(0.0, FRAC_PI_4), (FRAC_PI_4, FRAC_PI_2), (FRAC_PI_2, 3.0 * FRAC_PI_4), (3.0 * FRAC_PI_4, PI)] {
            let (ag, aw) = gauss_on(n, a, b);
            for (th, wth) in ag.iter().zip(&aw) {
                let (c, sn) = (th.cos(), th.sin());
                let rmax = 1.0 / c.abs().max(sn.abs());
                for (t, w) in tg.iter().zip(&tw) {
                    let r = rmax * t.powf(m);
                    let dr = rmax * m * t.powf(m - 1.0);
                    s += wth * w * dr * r * k.eval(r, 2) * overlap(r * c, r * sn);
                }
            }
        }
    }
    // the half range z > 0 (z₁ > 0) is half of the double integral
    0.5 * s
}

fn converged_reference(k: &KernelSpec, d: usize, g: Field) -> f64 {
    let mut n = 8;
    let mut prev = reference(k, d, g, n);
    while n < 256 {
        n *= 2;
        let next = reference(k, d, g, n);
        if (next - prev).abs() <= 1e-9 * next.abs() {
            return next;
        }
        prev = next;
    }
    prev
}

#[derive(Debug, Serialize)]
struct OracleCase {
    field: &'static str,
    energy: f64,
    reference: f64,
    rel_error: f64,
}

#[derive(Debug, Serialize)]
struct DimensionReport {
    dim: usize,
    cells: usize,
    degree: usize,
    nodes: usize,
    /// max |A − Aᵀ| / max |A|.
    symmetry: f64,
    /// max |Σ_j A_ij| / max |A|.
    row_sum: f64,
    constant_energy: f64,
    /// Smallest eigenvalue of A relative to the largest.
    min_eigenvalue: f64,
    /// |𝓗(Qg) − 𝓗(g)| / 𝓗(g) for a random two-component field.
    frame_defect: f64,
    oracle: Vec<OracleCase>,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct KernelReport {
    kernel: KernelSpec,
    tolerance_oracle: f64,
    tolerance_exact: f64,
    dims: Vec<DimensionReport>,
    passed: bool,
}

fn check_dimension(
    k: &KernelSpec,
    d: usize,
    cells: usize,
    degree: usize,
    seed: u64,
) -> Result<DimensionReport, CliError> {
    k.validate(d)?;
    let mesh = if d == 1 { Mesh::interval(0.0, 1.0, cells)? } else { Mesh::unit_square(cells) };
    let op = GagliardoOperator::new(&mesh, degree, k, &PairQuadrature::default())?;
    let a = op.matrix();
    let n = a.nrows();
    let scale = a.amax();
    let symmetry = (a - a.transpose()).amax() / scale;
    let row_sum = a.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max) / scale;
    let constant = NodalField { ncomp: 1, values: vec![2.5; n] };
    let constant_energy = gagliardo_energy(&op, &constant)?;
    let eig = a.clone().symmetric_eigenvalues();
    let min_eigenvalue = eig.min() / eig.max();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = NodalField { ncomp: 2, values: (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (c, s) = (t.cos(), t.sin());
    let mut r = g.clone();
    for i in 0..n {
        r.values[i] = c * g.values[i] - s * g.values[n + i];
        r.values[n + i] = s * g.values[i] + c * g.values[n + i];
    }
    let e0 = gagliardo_energy(&op, &g)?;
    let frame_defect = (gagliardo_energy(&op, &r)? - e0).abs() / e0;

    let fields: &[(&str, usize, Field)] = if d == 1 { &FIELDS_1D } else { &FIELDS_2D };
    let mut oracle = vec![];
    for &(name, deg, f) in fields {
        if deg > degree {
            continue;
        }
        let field = op.space.interpolate(1, |x| vec![f(x[0], x[1])]);
        let energy = gagliardo_energy(&op, &field)?;
        let reference = converged_reference(k, d, f);
        oracle.push(OracleCase {
            field: name,
            energy,
            reference,
            rel_error: (energy - reference).abs() / reference.abs(),
        });
    }
    let passed = symmetry <= TOL_EXACT
        && constant_energy == 0.0
        && min_eigenvalue >= -TOL_EXACT
        && frame_defect <= TOL_EXACT
        && oracle.iter().all(|o| o.rel_error <= TOL_ORACLE);
    Ok(DimensionReport {
        dim: d,
        cells,
        degree,
        nodes: n,
        symmetry,
        row_sum,
        constant_energy,
        min_eigenvalue,
        frame_defect,
        oracle,
        passed,
    })
}

pub fn prepare(cfg: &RunConfig) -> Result<KernelSpec, CliError> {
    let k = cfg.kernel.spec();
    k.validate(2)?;
    Ok(k)
}

pub fn execute(cfg: &RunConfig, k: &KernelSpec, out: &mut Artifacts) -> Result<(), CliError> {
    let mut dims = vec![];
    for d in [1, 2] {
        if d == 1 && k.validate(1).is_err() {
            continue;
        }
        dims.push(check_dimension(k, d, cfg.mesh.cells, cfg.mesh.degree, cfg.seed)?);
    }
    let passed = dims.iter().all(|d| d.passed);
    out.write_json(
        "kernel_check.json",
        &KernelReport { kernel: *k, tolerance_oracle: TOL_ORACLE, tolerance_exact: TOL_EXACT, dims, passed },
    )?;
    if !passed {
        return Err(CliError::Check("kernel invariants or oracle comparison outside tolerance".into()));
    }
    Ok(())
}
