use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::SpatialGrid;
use super::poisson::{potential_gradient, PotentialSolution};
use crate::constitutive::Mat2;
use crate::discretization::{DiscreteField, Mesh};
use crate::error::{Error, Result};
use crate::hyperstress::min_determinant_monitor;

/// χ(x) and ∇χ(x) for a two-component spline field.
pub fn eval_map(chi: &DiscreteField, x: [f64; 2]) -> Result<([f64; 2], Mat2)> {
    let e = chi.space.eval(x, 1)?;
    let n = chi.space.len();
    let mut z = [0.0; 2];
    let mut f = Mat2::zeros();
    for (k, &i) in e.idx.iter().enumerate() {
        for c in 0..2 {
            let a = chi.coeffs[c * n + i];
            z[c] += a * e.val[k];
            f[(c, 0)] += a * e.grad[k][0];
            f[(c, 1)] += a * e.grad[k][1];
        }
    }
    Ok((z, f))
}

pub fn eval_vector(field: &DiscreteField, x: [f64; 2]) -> Result<[f64; 2]> {
    let e = field.space.eval(x, 0)?;
    let n = field.space.len();
    let mut v = [0.0; 2];
    for (k, &i) in e.idx.iter().enumerate() {
        v[0] += field.coeffs[i] * e.val[k];
        v[1] += field.coeffs[n + i] * e.val[k];
    }
    Ok(v)
}

/// Referential field h_e = Fᵀ (𝗵_e ∘ χ) at the default quadrature points.
pub fn pull_back_external_field(chi: &DiscreteField, h_sp: &dyn Fn([f64; 2]) -> [f64; 2]) -> Result<Vec<[f64; 2]>> {
    let quad = chi.space.default_quadrature();
    quad.points
        .iter()
        .map(|&x| {
            let (z, f) = eval_map(chi, x)?;
            let h = h_sp(z);
            Ok([f[(0, 0)] * h[0] + f[(1, 0)] * h[1], f[(0, 1)] * h[0] + f[(1, 1)] * h[1]])
        })
        .collect()
}

/// Sampling controls for the Ciarlet–Nečas estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapOptions {
    pub samples: usize,
    pub seed: u64,
    /// Mean number of samples per occupancy cell.
    pub per_cell: f64,
    /// Gap (relative to |Ω|) above which a map counts as non-injective.
    pub tolerance: f64,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions { samples: 200_000, seed: 0x5eed, per_cell: 64.0, tolerance: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    pub integral_j: f64,
    /// ∫J/n with n the local multiplicity of the image.
    pub image_measure: f64,
    /// Measure of the raster cells hit by at least one sample.
    pub raster_measure: f64,
    pub gap: f64,
    pub min_det: f64,
}

/// Gap ∫_Ω J − meas χ(Ω) for an arbitrary map returning (χ(x), det ∇χ(x)).
pub fn ciarlet_necas_gap_map(mesh: &Mesh, map: &dyn Fn([f64; 2]) -> ([f64; 2], f64), opts: &GapOptions) -> GapReport {
    let lx = mesh.hi[0] - mesh.lo[0];
    let ly = mesh.hi[1] - mesh.lo[1];
    let nx = ((opts.samples as f64 * lx / ly).sqrt().round() as usize).max(1);
    let ny = (opts.samples / nx).max(1);
    let w = lx * ly / (nx * ny) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pts = Vec::with_capacity(nx * ny);
    let mut min_det = f64::INFINITY;
    for j in 0..ny {
        for i in 0..nx {
            let x = [
                mesh.lo[0] + (i as f64 + rng.random::<f64>()) * lx / nx as f64,
                mesh.lo[1] + (j as f64 + rng.random::<f64>()) * ly / ny as f64,
            ];
            let (z, jac) = map(x);
            min_det = min_det.min(jac);
            pts.push((z, w * jac.max(0.0)));
        }
    }
    let total: f64 = pts.iter().map(|p| p.1).sum();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for (z, _) in &pts {
        for a in 0..2 {
            lo[a] = lo[a].min(z[a]);
            hi[a] = hi[a].max(z[a]);
        }
    }
    let hs = (opts.per_cell * total / pts.len() as f64).sqrt().max(1e-300);
    let bins = |h: f64| {
        let n = [((hi[0] - lo[0]) / h).floor() as usize + 1, ((hi[1] - lo[1]) / h).floor() as usize + 1];
        let idx = move |z: [f64; 2]| {
            let i = (((z[0] - lo[0]) / h) as usize).min(n[0] - 1);
            let j = (((z[1] - lo[1]) / h) as usize).min(n[1] - 1);
            j * n[0] + i
        };
        (n[0] * n[1], idx)
    };
    let (nb, idx) = bins(hs);
    let mut mass = vec![0.0; nb];
    for (z, m) in &pts {
        mass[idx(*z)] += m;
    }
    // multiplicity from the densest cell of the 3×3 neighbourhood, so that
    // partially covered rim cells inherit the multiplicity of their interior
    let nbx = ((hi[0] - lo[0]) / hs).floor() as usize + 1;
    let nby = nb / nbx;
    let mult: Vec<f64> = (0..nb)
        .map(|b| {
            if mass[b] == 0.0 {
                return 1.0;
            }
            let (i, j) = ((b % nbx) as i64, (b / nbx) as i64);
            let mut d: f64 = 0.0;
            for dj in -1..=1 {
                for di in -1..=1 {
                    let (a, c) = (i + di, j + dj);
                    if a >= 0 && c >= 0 && (a as usize) < nbx && (c as usize) < nby {
                        d = d.max(mass[c as usize * nbx + a as usize]);
                    }
                }
            }
            (d / (hs * hs)).round().max(1.0)
        })
        .collect();
    let mut gap = 0.0;
    for (z, m) in &pts {
        gap += m * (1.0 - 1.0 / mult[idx(*z)]);
    }
    let hr = 2.0 * (total / pts.len() as f64).sqrt().max(1e-300);
    let (nr, idr) = bins(hr);
    let mut hit = vec![false; nr];
    for (z, _) in &pts {
        hit[idr(*z)] = true;
    }
    let raster_measure = hit.iter().filter(|h| **h).count() as f64 * hr * hr;
    GapReport { integral_j: total, image_measure: total - gap, raster_measure, gap, min_det }
}

pub fn ciarlet_necas_gap(chi: &DiscreteField, opts: &GapOptions) -> GapReport {
    let map = |x: [f64; 2]| match eval_map(chi, x) {
        Ok((z, f)) => (z, f.determinant()),
        Err(_) => ([f64::NAN; 2], f64::NAN),
    };
    ciarlet_necas_gap_map(&chi.space.mesh, &map, opts)
}

/// Bounding box of χ(Ω) from the images of the quadrature points and the
/// boundary of Ω.
pub fn image_bounds(chi: &DiscreteField) -> Result<([f64; 2], [f64; 2])> {
    let mesh = &chi.space.mesh;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut see = |x: [f64; 2]| -> Result<()> {
        let (z, _) = eval_map(chi, x)?;
        for a in 0..2 {
            lo[a] = lo[a].min(z[a]);
            hi[a] = hi[a].max(z[a]);
        }
        Ok(())
    };
    let n = 8 * mesh.cells[0].max(mesh.cells[1]);
    for k in 0..=n {
        let t = k as f64 / n as f64;
        let x = mesh.lo[0] + t * (mesh.hi[0] - mesh.lo[0]);
        let y = mesh.lo[1] + t * (mesh.hi[1] - mesh.lo[1]);
        see([x, mesh.lo[1]])?;
        see([x, mesh.hi[1]])?;
        see([mesh.lo[0], y])?;
        see([mesh.hi[0], y])?;
    }
    for x in chi.space.default_quadrature().points {
        see(x)?;
    }
    Ok((lo, hi))
}

/// Reference samples at the midpoints of `s × s` sub-cells of every cell.
pub fn reference_samples(mesh: &Mesh, s: usize) -> Vec<([f64; 2], f64)> {
    let h = [mesh.h(0), mesh.h(1)];
    let mut out = Vec::with_capacity(mesh.n_cells() * s * s);
    let w = h[0] * h[1] / (s * s) as f64;
    for j in 0..mesh.cells[1] * s {
        for i in 0..mesh.cells[0] * s {
            let x = [mesh.lo[0] + (i as f64 + 0.5) * h[0] / s as f64, mesh.lo[1] + (j as f64 + 0.5) * h[1] / s as f64];
            out.push((x, w));
        }
    }
    out
}

/// Checks J > 0 and injectivity, as required before pushing forward.
pub fn check_admissible(chi: &DiscreteField, opts: &GapOptions) -> Result<GapReport> {
    let (j, at) = min_determinant_monitor(chi);
    if j <= 0.0 {
        return Err(Error::DegenerateDeformation { det: j, location: format!("({:.6}, {:.6})", at[0], at[1]) });
    }
    let rep = ciarlet_necas_gap(chi, opts);
    if rep.gap > opts.tolerance * chi.space.mesh.measure() {
        return Err(Error::NonInjective { gap: rep.gap });
    }
    Ok(rep)
}

/// Spatial magnetization 𝗆 = (J⁻¹ F m) ∘ χ⁻¹ on the grid cells, zero
/// outside the rasterized image; each hit cell takes the value of the
/// forward-mapped sample nearest to its centre. Cells on the rim of the
/// image are scaled by the fraction of their area the samples cover.
pub fn push_forward_magnetization(chi: &DiscreteField, m: &DiscreteField, grid: &SpatialGrid) -> Result<Vec<[f64; 2]>> {
    push_forward_with(chi, m, grid, &GapOptions::default())
}

pub fn push_forward_with(
    chi: &DiscreteField,
    m: &DiscreteField,
    grid: &SpatialGrid,
    opts: &GapOptions,
) -> Result<Vec<[f64; 2]>> {
    check_admissible(chi, opts)?;
    let (lo, hi) = image_bounds(chi)?;
    if !grid.contains_box(lo, hi, 0.0) {
        return Err(Error::InvalidInput("the deformed body leaves the spatial grid".into()));
    }
    let mesh = &chi.space.mesh;
    let quad = chi.space.default_quadrature();
    let mut fmax: f64 = 0.0;
    for &x in &quad.points {
        let (_, f) = eval_map(chi, x)?;
        fmax = fmax.max(f.norm());
    }
    let hg = grid.h()[0].min(grid.h()[1]);
    let hm = mesh.h(0).max(mesh.h(1));
    let s = ((4.0 * fmax * hm / hg).ceil() as usize).clamp(2, 4096);
    let mut best: Vec<(f64, [f64; 2])> = vec![(f64::INFINITY, [0.0; 2]); grid.n_cells()];
    let mut mass = vec![0.0; grid.n_cells()];
    for (x, w) in reference_samples(mesh, s) {
        let (z, f) = eval_map(chi, x)?;
        let Some([i, j]) = grid.cell_of(z) else { continue };
        let c = grid.cell_index(i, j);
        mass[c] += w * f.determinant();
        let zc = grid.cell_center(c);
        let d2 = (z[0] - zc[0]).powi(2) + (z[1] - zc[1]).powi(2);
        if d2 < best[c].0 {
            let mv = eval_vector(m, x)?;
            let j = f.determinant();
            let fm = f * nalgebra::Vector2::new(mv[0], mv[1]) / j;
            best[c] = (d2, [fm[0], fm[1]]);
        }
    }
    // rim cells (some neighbour missed) are scaled by their covered fraction
    let (nx, ny) = (grid.cells[0], grid.cells[1]);
    let area = grid.cell_area();
    Ok((0..grid.n_cells())
        .map(|c| {
            let (d, v) = best[c];
            if !d.is_finite() {
                return [0.0; 2];
            }
            let (i, j) = (c % nx, c / nx);
            let interior = i > 0
                && j > 0
                && i + 1 < nx
                && j + 1 < ny
                && [c - 1, c + 1, c - nx, c + nx, c - nx - 1, c - nx + 1, c + nx - 1, c + nx + 1]
                    .iter()
                    .all(|k| best[*k].0.is_finite());
            let frac = if interior { 1.0 } else { (mass[c] / area).min(1.0) };
            [frac * v[0], frac * v[1]]
        })
        .collect())
}

/// Referential form −½ ∫_Ω (Fᵀ∇φ∘χ)·m dx of the magnetostatic energy.
pub fn referential_energy(
    chi: &DiscreteField,
    m: &DiscreteField,
    sol: &PotentialSolution,
    grid: &SpatialGrid,
) -> Result<f64> {
    let quad = chi.space.quadrature(chi.space.degree + 3);
    let mut terms = Vec::with_capacity(quad.len());
    for (q, &x) in quad.points.iter().enumerate() {
        let (z, f) = eval_map(chi, x)?;
        let g = potential_gradient(grid, &sol.phi, z).ok_or(Error::OutOfDomain { x: z[0], y: z[1] })?;
        let mv = eval_vector(m, x)?;
        let fm = f * nalgebra::Vector2::new(mv[0], mv[1]);
        terms.push(quad.weights[q] * (g[0] * fm[0] + g[1] * fm[1]));
    }
    Ok(-0.5 * crate::linalg::pairwise_sum(&terms))
}

/// Spatial Zeeman energy ∫ 𝗵_e·𝗆̄ dz over the grid (cell midpoint rule).
pub fn spatial_zeeman(grid: &SpatialGrid, m_bar: &[[f64; 2]], h_sp: &dyn Fn([f64; 2]) -> [f64; 2]) -> f64 {
    let a = grid.cell_area();
    let terms: Vec<f64> = (0..grid.n_cells())
        .map(|c| {
            let m = m_bar[c];
            if m == [0.0, 0.0] {
                return 0.0;
            }
            let h = h_sp(grid.cell_center(c));
            a * (h[0] * m[0] + h[1] * m[1])
        })
        .collect();
    crate::linalg::pairwise_sum(&terms)
}
