use nalgebra::{Cholesky, DMatrix, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::nodal::{NodalField, NodalSpace};
use crate::discretization::{Mesh, SplineSpace};
use crate::error::{Error, Result};
use crate::linalg::{gauss_legendre, gauss_on};

/// Quadrature controls for the pair integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairQuadrature {
    /// Geometric grading ratio of the radial panels near the diagonal.
    pub grading: f64,
    /// Number of radial panels; 0 picks it from γ.
    pub levels: usize,
    pub radial_points: usize,
    pub angular_points: usize,
    /// Gauss points per axis on non-singular z-boxes of touching cells.
    pub regular_points: usize,
    /// Cell offsets up to this ∞-distance use refined rules.
    pub refined_offsets: usize,
    pub refined_subcells: usize,
    pub refined_points: usize,
    /// Extra points per axis (beyond r + 1) for distant pairs.
    pub far_extra_points: usize,
    /// Allowed relative contribution of the innermost radial panel.
    pub tail_tolerance: f64,
}

impl Default for PairQuadrature {
    fn default() -> Self {
        PairQuadrature {
            grading: 0.3,
            levels: 0,
            radial_points: 8,
            angular_points: 10,
            regular_points: 10,
            refined_offsets: 3,
            refined_subcells: 2,
            refined_points: 6,
            far_extra_points: 1,
            tail_tolerance: 1e-8,
        }
    }
}

/// Assembled quadratic form 𝓗(G) = ¼ Σ_c g_cᵀ A g_c of the nonlocal energy
/// on a nodal space, with A symmetric and with zero row sums.
#[derive(Debug, Clone)]
pub struct GagliardoOperator {
    pub space: NodalSpace,
    pub kernel: KernelSpec,
    a: DMatrix<f64>,
    mass: DMatrix<f64>,
    mass_chol: Cholesky<f64, Dyn>,
}

/// Union of the nodes of two cells at lattice offset `o`.
struct PairNodes {
    lattice: Vec<[i64; 2]>,
    first: Vec<usize>,
    second: Vec<usize>,
}

impl PairNodes {
    fn new(space: &NodalSpace, o: [i64; 2]) -> PairNodes {
        let r = [space.axis_order(0) as i64, space.axis_order(1) as i64];
        let mut lattice: Vec<[i64; 2]> = vec![];
        let find = |p: [i64; 2], lattice: &mut Vec<[i64; 2]>| match lattice.iter().position(|q| *q == p) {
            Some(k) => k,
            None => {
                lattice.push(p);
                lattice.len() - 1
            }
        };
        let loc = space.local_nodes();
        let first = loc.iter().map(|l| find([l[0] as i64, l[1] as i64], &mut lattice)).collect();
        let second =
            loc.iter().map(|l| find([o[0] * r[0] + l[0] as i64, o[1] * r[1] + l[1] as i64], &mut lattice)).collect();
        PairNodes { lattice, first, second }
    }

    fn len(&self) -> usize {
        self.lattice.len()
    }

    /// Row Φ(x) − Φ(y) for reference points u in the first and v in the
    /// second cell, scaled by `s`.
    fn row(&self, space: &NodalSpace, u: [f64; 2], v: [f64; 2], s: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (k, val) in space.local_values(u).iter().enumerate() {
            out[self.first[k]] += s * val;
        }
        for (k, val) in space.local_values(v).iter().enumerate() {
            out[self.second[k]] -= s * val;
        }
    }
}

/// Accumulates Σ w (Φ(x)−Φ(y))(Φ(x)−Φ(y))ᵀ in blocks of rows.
struct Accumulator {
    n: usize,
    rows: Vec<f64>,
    count: usize,
    sum: DMatrix<f64>,
}

const BLOCK: usize = 2048;

impl Accumulator {
    fn new(n: usize) -> Accumulator {
        Accumulator { n, rows: vec![0.0; BLOCK * n], count: 0, sum: DMatrix::zeros(n, n) }
    }

    fn slot(&mut self) -> &mut [f64] {
        if self.count == BLOCK {
            self.flush();
        }
        let k = self.count;
        self.count += 1;
        &mut self.rows[k * self.n..(k + 1) * self.n]
    }

    fn flush(&mut self) {
        if self.count == 0 {
            return;
        }
        // rows are stored row-major, i.e. as the columns of an n × count matrix
        let v = DMatrix::from_column_slice(self.n, self.count, &self.rows[..self.count * self.n]);
        self.sum.gemm(1.0, &v, &v.transpose(), 1.0);
        self.count = 0;
    }

    fn finish(mut self) -> DMatrix<f64> {
        self.flush();
        self.sum
    }
}

fn radial_levels(q: &PairQuadrature, gamma: f64) -> usize {
    if q.levels > 0 {
        return q.levels;
    }
    let decay = (2.0 - 2.0 * gamma).max(0.05);
    let per = -(q.grading.log10());
    ((14.0 / (decay * per)).ceil() as usize).clamp(4, 400)
}

/// Graded composite Gauss rule on (0, 1]; the first panel is the innermost.
fn graded_rule(q: &PairQuadrature, levels: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut panels = vec![];
    let inner = q.grading.powi(levels as i32);
    panels.push(gauss_on(q.radial_points, 0.0, inner));
    for k in (0..levels).rev() {
        let a = q.grading.powi(k as i32 + 1);
        let b = q.grading.powi(k as i32);
        panels.push(gauss_on(q.radial_points, a, b));
    }
    panels
}

impl GagliardoOperator {
    pub fn new(mesh: &Mesh, order: usize, kernel: &KernelSpec, quad: &PairQuadrature) -> Result<GagliardoOperator> {
        kernel.validate(mesh.dim)?;
        let space = NodalSpace::new(mesh.clone(), order)?;
        let n = space.len();
        let cells = space.cells();
        let d = mesh.dim;
        let reach = quad.refined_offsets.max(1) as i64;

        // half set of offsets (o > 0 lexicographically by (y, x)) plus o = 0
        let mut offsets: Vec<[i64; 2]> = vec![[0, 0]];
        let ry = if d == 2 { reach } else { 0 };
        for oy in 0..=ry {
            for ox in -reach..=reach {
                if (oy == 0 && ox <= 0) || ox.unsigned_abs() as usize >= cells[0] || oy as usize >= cells[1] {
                    continue;
                }
                offsets.push([ox, oy]);
            }
        }

        let locals: Vec<Result<(PairNodes, DMatrix<f64>)>> = offsets
            .par_iter()
            .map(|&o| {
                let nodes = PairNodes::new(&space, o);
                let m = if o[0].abs() <= 1 && o[1].abs() <= 1 {
                    touching_pair(&space, kernel, quad, o, &nodes)?
                } else {
                    refined_pair(&space, kernel, quad, o, &nodes)
                };
                Ok((nodes, m))
            })
            .collect();

        let mut a = DMatrix::zeros(n, n);
        for (o, res) in offsets.iter().zip(locals) {
            let (nodes, m) = res?;
            let factor = if *o == [0, 0] { 1.0 } else { 2.0 };
            for cy in 0..cells[1] as i64 {
                for cx in 0..cells[0] as i64 {
                    let (dx, dy) = (cx + o[0], cy + o[1]);
                    if dx < 0 || dy < 0 || dx >= cells[0] as i64 || dy >= cells[1] as i64 {
                        continue;
                    }
                    let base = [cx * space.axis_order(0) as i64, cy * space.axis_order(1) as i64];
                    let g: Vec<usize> = nodes
                        .lattice
                        .iter()
                        .map(|l| space.lattice((base[0] + l[0]) as usize, (base[1] + l[1]) as usize))
                        .collect();
                    for (p, &gp) in g.iter().enumerate() {
                        for (q, &gq) in g.iter().enumerate() {
                            a[(gp, gq)] += factor * m[(p, q)];
                        }
                    }
                }
            }
        }
        add_far_pairs(&space, kernel, quad, reach, &mut a);

        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (a[(i, j)] + a[(j, i)]);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                if j != i {
                    s += a[(i, j)];
                }
            }
            a[(i, i)] = -s;
        }

        let mass = space.mass();
        let mass_chol = mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SolverDivergence("nodal mass matrix not positive definite".into()))?;
        Ok(GagliardoOperator { space, kernel: *kernel, a, mass, mass_chol })
    }

    /// The pair matrix A (ordered pairs, symmetric, zero row sums).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    fn check(&self, field: &NodalField) -> Result<()> {
        if field.ncomp == 0 || field.values.len() != field.ncomp * self.space.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} values, expected a multiple of {}",
                field.values.len(),
                self.space.len()
            )));
        }
        Ok(())
    }

    /// ¼ Σ_c Σ_{a<b} (−A_ab)(g_a − g_b)², visiting each unordered pair once.
    pub fn energy(&self, field: &NodalField) -> Result<f64> {
        self.check(field)?;
        let n = self.space.len();
        let mut total = 0.0;
        for c in 0..field.ncomp {
            let g = field.component(c);
            let col: Vec<f64> = (1..n)
                .into_par_iter()
                .map(|b| {
                    let mut s = 0.0;
                    for a in 0..b {
                        let d = g[a] - g[b];
                        s -= self.a[(a, b)] * d * d;
                    }
                    s
                })
                .collect();
            total += crate::linalg::pairwise_sum(&col);
        }
        Ok(0.25 * total)
    }

    /// Gradient of the energy with respect to the nodal values, ½ A g.
    pub fn gradient(&self, field: &NodalField) -> Result<NodalField> {
        self.check(field)?;
        let n = self.space.len();
        let mut out = NodalField::zeros(n, field.ncomp);
        for c in 0..field.ncomp {
            let g = nalgebra::DVector::from_column_slice(field.component(c));
            let f = &self.a * g * 0.5;
            out.values[c * n..(c + 1) * n].copy_from_slice(f.as_slice());
        }
        Ok(out)
    }

    /// Nodal hyperstress h with ∫ h·G̃ = D𝓗(G)[G̃] for nodal G̃.
    pub fn hyperstress(&self, field: &NodalField) -> Result<NodalField> {
        let mut f = self.gradient(field)?;
        let n = self.space.len();
        for c in 0..f.ncomp {
            let rhs = nalgebra::DVector::from_column_slice(&f.values[c * n..(c + 1) * n]);
            let h = self.mass_chol.solve(&rhs);
            f.values[c * n..(c + 1) * n].copy_from_slice(h.as_slice());
        }
        Ok(f)
    }

    /// ∫ h·g over the domain for two nodal fields.
    pub fn pairing(&self, h: &NodalField, g: &NodalField) -> Result<f64> {
        self.check(h)?;
        self.check(g)?;
        let mut s = 0.0;
        for c in 0..h.ncomp {
            let hv = nalgebra::DVector::from_column_slice(h.component(c));
            let gv = nalgebra::DVector::from_column_slice(g.component(c));
            s += hv.dot(&(&self.mass * gv));
        }
        Ok(s)
    }

    /// Matrix B with 𝓗(∇²χ) = ½ Σ_i c_iᵀ B c_i for spline coefficients c_i,
    /// summing the Hessian entries (xx, xy, yx, yy).
    pub fn hessian_form(&self, space: &SplineSpace) -> Result<DMatrix<f64>> {
        let [hxx, hxy, hyy] = self.space.hessian_sampler(space)?;
        let nb = space.len();
        let mut b = DMatrix::zeros(nb, nb);
        let weights = if self.space.dim() == 2 { [1.0, 2.0, 1.0] } else { [1.0, 0.0, 0.0] };
        for (h, w) in [hxx, hxy, hyy].iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let hd = h.to_dense();
            let ah = &self.a * &hd;
            b += hd.transpose() * ah * (0.5 * w);
        }
        Ok(b)
    }

    /// Samples ∇²χ of a two-component spline field at the nodes, as the
    /// eight components G_ijk (index 4i + 2j + k).
    pub fn sample_hessian(&self, space: &SplineSpace, coeffs: &[f64]) -> Result<NodalField> {
        let [hxx, hxy, hyy] = self.space.hessian_sampler(space)?;
        let nb = space.len();
        let n = self.space.len();
        let mut out = NodalField::zeros(n, 8);
        for i in 0..2 {
            let c = &coeffs[i * nb..(i + 1) * nb];
            let (xx, xy, yy) = (hxx.mul_vec(c), hxy.mul_vec(c), hyy.mul_vec(c));
            for (jk, v) in [(0, &xx), (1, &xy), (2, &xy), (3, &yy)] {
                out.values[(4 * i + jk) * n..(4 * i + jk + 1) * n].copy_from_slice(v);
            }
        }
        Ok(out)
    }
}

/// 𝓗(G) for a nodal field.
pub fn gagliardo_energy(op: &GagliardoOperator, field: &NodalField) -> Result<f64> {
    op.energy(field)
}

/// The nonlocal hyperstress 𝕳(G) as a nodal field.
pub fn hyperstress_force(op: &GagliardoOperator, field: &NodalField) -> Result<NodalField> {
    op.hyperstress(field)
}

/// Pair matrix of a cell and its neighbour at offset `o` (|o|∞ ≤ 1), by the
/// substitution z = y − x and a Duffy split of the z-boxes cornered at 0.
fn touching_pair(
    space: &NodalSpace,
    kernel: &KernelSpec,
    q: &PairQuadrature,
    o: [i64; 2],
    nodes: &PairNodes,
) -> Result<DMatrix<f64>> {
    let d = space.dim();
    let h = space.cell_size();
    let nu = nodes.len();
    let levels = radial_levels(q, kernel.gamma);
    let radial = graded_rule(q, levels);
    let (tg, tw) = gauss_on(q.angular_points, 0.0, 1.0);
    let (rg, rw) = gauss_legendre(q.regular_points);
    let ninner = space.order + 1;
    let (ig, iw) = gauss_legendre(ninner);

    let mut acc = Accumulator::new(nu);
    let mut tail = Accumulator::new(nu);
    let mut row = vec![0.0; nu];

    // visit one z point: integrate over x exactly and push the rows
    let mut visit = |z: [f64; 2], wz: f64, acc: &mut Accumulator| {
        let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
        let k = kernel.eval(r, d);
        if k == 0.0 || wz == 0.0 {
            return;
        }
        let mut lo = [0.0; 2];
        let mut hi = [1.0; 2];
        for ax in 0..d {
            let oh = o[ax] as f64 * h[ax];
            lo[ax] = (oh - z[ax]).max(0.0);
            hi[ax] = (oh + h[ax] - z[ax]).min(h[ax]);
            if hi[ax] <= lo[ax] {
                return;
            }
        }
        let ny = if d == 2 { ninner } else { 1 };
        for b in 0..ny {
            let (x1, w1) = if d == 2 {
                let c = 0.5 * (lo[1] + hi[1]);
                let s = 0.5 * (hi[1] - lo[1]);
                (c + s * ig[b], s * iw[b])
            } else {
                (0.0, 1.0)
            };
            for a in 0..ninner {
                let c = 0.5 * (lo[0] + hi[0]);
                let s = 0.5 * (hi[0] - lo[0]);
                let x0 = c + s * ig[a];
                let w = wz * k * w1 * s * iw[a];
                let u = [x0 / h[0], if d == 2 { x1 / h[1] } else { 0.0 }];
                let v = [
                    (x0 + z[0] - o[0] as f64 * h[0]) / h[0],
                    if d == 2 { (x1 + z[1] - o[1] as f64 * h[1]) / h[1] } else { 0.0 },
                ];
                nodes.row(space, u, v, w.sqrt(), &mut row);
                acc.slot().copy_from_slice(&row);
            }
        }
    };

    // the z-range along each active axis splits at o·h into two halves
    let halves = |ax: usize| -> [(i64, i64); 2] { [(o[ax] - 1, o[ax]), (o[ax], o[ax] + 1)] };
    let hy: [(i64, i64); 2] = if d == 2 { halves(1) } else { [(0, 0), (0, 0)] };
    let ny = if d == 2 { 2 } else { 1 };
    for &(ax0, ax1) in halves(0).iter() {
        for &(ay0, ay1) in hy.iter().take(ny) {
            let corner_x = ax0 == 0 || ax1 == 0;
            let corner_y = d == 1 || ay0 == 0 || ay1 == 0;
            if corner_x && corner_y {
                let sx = if ax0 == 0 { 1.0 } else { -1.0 };
                let sy = if ay0 == 0 { 1.0 } else { -1.0 };
                for (p, (rho, rwt)) in radial.iter().enumerate() {
                    let target = if p == 0 { &mut tail } else { &mut acc };
                    for (r, wr) in rho.iter().zip(rwt) {
                        if d == 1 {
                            visit([sx * h[0] * r, 0.0], wr * h[0], target);
                            continue;
                        }
                        for (t, wt) in tg.iter().zip(&tw) {
                            let jac = r * h[0] * h[1] * wr * wt;
                            visit([sx * h[0] * r, sy * h[1] * r * t], jac, target);
                            visit([sx * h[0] * r * t, sy * h[1] * r], jac, target);
                        }
                    }
                }
            } else {
                let (zx0, zx1) = (ax0 as f64 * h[0], ax1 as f64 * h[0]);
                let (zy0, zy1) = (ay0 as f64 * h[1], ay1 as f64 * h[1]);
                for (a, wa) in rg.iter().zip(&rw) {
                    let zx = 0.5 * (zx0 + zx1) + 0.5 * (zx1 - zx0) * a;
                    let wx = 0.5 * (zx1 - zx0) * wa;
                    if d == 1 {
                        visit([zx, 0.0], wx, &mut acc);
                        continue;
                    }
                    for (b, wb) in rg.iter().zip(&rw) {
                        let zy = 0.5 * (zy0 + zy1) + 0.5 * (zy1 - zy0) * b;
                        visit([zx, zy], wx * 0.5 * (zy1 - zy0) * wb, &mut acc);
                    }
                }
            }
        }
    }
    let main = acc.finish();
    let inner = tail.finish();
    let scale = main.trace();
    if inner.trace() > q.tail_tolerance * scale || !scale.is_finite() {
        return Err(Error::QuadratureDivergence(format!(
            "innermost radial panel carries {:.3e} of the pair integral at offset {:?}",
            inner.trace() / scale,
            o
        )));
    }
    Ok(main + inner)
}

fn panel_points(space: &NodalSpace, sub: usize, q: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let d = space.dim();
    let mut ux = vec![];
    let mut wx = vec![];
    for s in 0..sub {
        let (p, w) = gauss_on(q, s as f64 / sub as f64, (s + 1) as f64 / sub as f64);
        ux.extend(p);
        wx.extend(w);
    }
    let (uy, wy) = if d == 2 { (ux.clone(), wx.clone()) } else { (vec![0.0], vec![1.0]) };
    let mut pts = vec![];
    let mut wts = vec![];
    for (b, wb) in uy.iter().zip(&wy) {
        for (a, wa) in ux.iter().zip(&wx) {
            pts.push([*a, *b]);
            wts.push(wa * wb);
        }
    }
    (pts, wts)
}

/// Pair matrix for separated cells with a refined tensor Gauss rule.
fn refined_pair(
    space: &NodalSpace,
    kernel: &KernelSpec,
    q: &PairQuadrature,
    o: [i64; 2],
    nodes: &PairNodes,
) -> DMatrix<f64> {
    let d = space.dim();
    let h = space.cell_size();
    let vol = h[0] * h[1];
    let (pts, wts) = panel_points(space, q.refined_subcells.max(1), q.refined_points);
    let np = pts.len();
    let nu = nodes.len();
    let mut p1 = DMatrix::zeros(np, nu);
    let mut p2 = DMatrix::zeros(np, nu);
    for (i, u) in pts.iter().enumerate() {
        let v = space.local_values(*u);
        for (k, val) in v.iter().enumerate() {
            p1[(i, nodes.first[k])] += val;
            p2[(i, nodes.second[k])] += val;
        }
    }
    let mut kw = DMatrix::zeros(np, np);
    for (i, u) in pts.iter().enumerate() {
        for (j, v) in pts.iter().enumerate() {
            let dx = (o[0] as f64 + v[0] - u[0]) * h[0];
            let dy = if d == 2 { (o[1] as f64 + v[1] - u[1]) * h[1] } else { 0.0 };
            kw[(i, j)] = wts[i] * wts[j] * vol * vol * kernel.eval((dx * dx + dy * dy).sqrt(), d);
        }
    }
    let r1: Vec<f64> = (0..np).map(|i| kw.row(i).sum()).collect();
    let r2: Vec<f64> = (0..np).map(|j| kw.column(j).sum()).collect();
    let mut d1 = p1.clone();
    let mut d2 = p2.clone();
    for i in 0..np {
        d1.row_mut(i).scale_mut(r1[i]);
        d2.row_mut(i).scale_mut(r2[i]);
    }
    let cross = p1.transpose() * &kw * &p2;
    p1.transpose() * d1 + p2.transpose() * d2 - &cross - cross.transpose()
}

/// Adds 2(Eᵀ diag(K1) E − Eᵀ K E) over Gauss points of cells farther apart
/// than `reach` in the ∞-distance.
fn add_far_pairs(space: &NodalSpace, kernel: &KernelSpec, q: &PairQuadrature, reach: i64, a: &mut DMatrix<f64>) {
    let d = space.dim();
    let cells = space.cells();
    if cells[0] as i64 <= reach + 1 && cells[1] as i64 <= reach + 1 {
        return;
    }
    let pts = space.gauss_points(space.order + 1 + q.far_extra_points);
    let loc = space.local_nodes();
    let rows: Vec<(Vec<usize>, Vec<f64>)> = pts
        .iter()
        .map(|(_, _, cell, u)| (loc.iter().map(|l| space.global(*cell, *l)).collect(), space.local_values(*u)))
        .collect();
    let np = pts.len();
    let n = space.len();
    let far = |c1: [usize; 2], c2: [usize; 2]| {
        let dx = (c1[0] as i64 - c2[0] as i64).abs();
        let dy = (c1[1] as i64 - c2[1] as i64).abs();
        dx.max(dy) > reach
    };
    // K E, row by row, and the row sums of K
    let ke: Vec<(Vec<f64>, f64)> = (0..np)
        .into_par_iter()
        .map(|i| {
            let (xi, wi, ci, _) = pts[i];
            let mut out = vec![0.0; n];
            let mut rs = 0.0;
            for (j, (xj, wj, cj, _)) in pts.iter().enumerate() {
                if !far(ci, *cj) {
                    continue;
                }
                let r = ((xi[0] - xj[0]).powi(2) + (xi[1] - xj[1]).powi(2)).sqrt();
                let k = wi * wj * kernel.eval(r, d);
                if k == 0.0 {
                    continue;
                }
                rs += k;
                for (g, v) in rows[j].0.iter().zip(&rows[j].1) {
                    out[*g] += k * v;
                }
            }
            (out, rs)
        })
        .collect();
    for (i, (kei, rs)) in ke.iter().enumerate() {
        let (gi, vi) = &rows[i];
        for (p, &gp) in gi.iter().enumerate() {
            for (q2, &gq) in gi.iter().enumerate() {
                a[(gp, gq)] += 2.0 * rs * vi[p] * vi[q2];
            }
            for (col, v) in kei.iter().enumerate() {
                if *v != 0.0 {
                    a[(gp, col)] -= 2.0 * vi[p] * v;
                }
            }
        }
    }
}
