use std::f64::consts::PI;

use thermomag::discretization::Mesh;
use thermomag::magnetostatics::*;
use thermomag::Error;

mod common;
use common::*;

#[test]
fn zero_magnetization_gives_zero_potential() {
    let grid = disk_grid(4.0, 32, PotentialBoundary::Robin);
    let sol = solve_scalar_potential(&vec![[0.0; 2]; grid.n_cells()], &grid).unwrap();
    assert!(sol.phi.iter().all(|p| *p == 0.0));
    assert_eq!(sol.energy, 0.0);
}

#[test]
fn disk_energy_matches_demagnetizing_factor_one_half() {
    let exact = PI / 4.0;
    let grid = disk_grid(4.0, 256, PotentialBoundary::Robin);
    let sol = disk_energy(&grid);
    assert!(((sol.energy - exact) / exact).abs() < 0.02, "{}", sol.energy);
    assert!(((sol.energy - sol.energy_moment) / sol.energy).abs() < 1e-8);
    // interior field −𝗆/2
    let g = potential_gradient(&grid, &sol.phi, [0.01, 0.02]).unwrap();
    assert!((g[0] + 0.5).abs() < 0.02 && g[1].abs() < 0.02, "{g:?}");
}

#[test]
fn disk_error_decreases_with_resolution() {
    let exact = PI / 4.0;
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| (disk_energy(&disk_grid(4.0, n, PotentialBoundary::Robin)).energy - exact).abs())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn disk_truncation_error_decreases_with_margin() {
    // fixed cell size h = 1/12
    let energies = |bc| -> Vec<f64> {
        [2.0, 3.0, 4.0, 6.0, 8.0]
            .iter()
            .map(|&m: &f64| disk_energy(&disk_grid(m, (24.0 * (1.0 + m)).round() as usize, bc)).energy)
            .collect()
    };
    let robin = energies(PotentialBoundary::Robin);
    let last = robin[robin.len() - 1];
    let trunc: Vec<f64> = robin[..robin.len() - 1].iter().map(|e| (e - last).abs()).collect();
    assert!(trunc.windows(2).all(|w| w[1] < w[0]), "{trunc:?}");
    let exact = PI / 4.0;
    let dir: Vec<f64> = energies(PotentialBoundary::ZeroDirichlet).iter().map(|e| (e - exact).abs()).collect();
    assert!(dir.windows(2).all(|w| w[1] < w[0]), "{dir:?}");
}

#[test]
fn energy_is_quadratic_in_magnetization() {
    let grid = disk_grid(4.0, 64, PotentialBoundary::Robin);
    let m = disk(&grid);
    let m2: Vec<[f64; 2]> = m.iter().map(|v| [2.0 * v[0], 2.0 * v[1]]).collect();
    let e1 = solve_scalar_potential(&m, &grid).unwrap().energy;
    let e2 = solve_scalar_potential(&m2, &grid).unwrap().energy;
    assert!((e2 - 4.0 * e1).abs() < 1e-8 * e2);
    assert!(e1 > 0.0);
}

#[test]
fn dirichlet_truncation_is_available() {
    let grid = disk_grid(4.0, 128, PotentialBoundary::ZeroDirichlet);
    let sol = disk_energy(&grid);
    assert!(sol.energy > 0.0 && sol.energy < PI / 4.0);
    assert!(((sol.energy - sol.energy_moment) / sol.energy).abs() < 1e-8);
}

fn unit_grid(cells: usize) -> SpatialGrid {
    SpatialGrid::new([-1.5, -1.5], [2.5, 2.5], [cells, cells], 1.0, PotentialBoundary::Robin).unwrap()
}

#[test]
fn push_forward_of_identity_samples_m_inside() {
    let chi = field(Mesh::unit_square(4), |x| vec![x[0], x[1]]);
    let m = field(Mesh::unit_square(4), |_| vec![1.0, 0.5]);
    let grid = unit_grid(64);
    let mb = push_forward_magnetization(&chi, &m, &grid).unwrap();
    for (c, mc) in mb.iter().enumerate() {
        let z = grid.cell_center(c);
        let h = grid.h()[0];
        let inside = z[0] > h && z[0] < 1.0 - h && z[1] > h && z[1] < 1.0 - h;
        if inside {
            assert!((mc[0] - 1.0).abs() < 1e-10 && (mc[1] - 0.5).abs() < 1e-10);
        } else {
            let far = z[0] < -h || z[0] > 1.0 + h || z[1] < -h || z[1] > 1.0 + h;
            if far {
                assert_eq!(*mc, [0.0, 0.0]);
            }
        }
    }
}

#[test]
fn push_forward_of_dilation_halves_m() {
    let chi = field(Mesh::unit_square(4), |x| vec![2.0 * x[0], 2.0 * x[1]]);
    let m = field(Mesh::unit_square(4), |_| vec![1.0, 0.0]);
    let grid = unit_grid(64);
    let mb = push_forward_magnetization(&chi, &m, &grid).unwrap();
    let c = grid.cell_index(40, 40);
    let z = grid.cell_center(c);
    assert!(z[0] > 0.5 && z[0] < 1.5);
    assert!((mb[c][0] - 0.5).abs() < 1e-10 && mb[c][1].abs() < 1e-12);
}

#[test]
fn push_forward_preserves_the_mass_identity() {
    let map = |x: [f64; 2]| vec![x[0] + 0.2 * x[1] * x[1], 0.9 * x[1] + 0.1 * x[0]];
    let chi = field(Mesh::unit_square(4), map);
    let m = field(Mesh::unit_square(4), |x| vec![1.0 - x[1], 0.5 * x[0]]);
    let grid = unit_grid(256);
    let mb = push_forward_magnetization(&chi, &m, &grid).unwrap();
    let spatial: f64 = mb.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum::<f64>() * grid.cell_area();
    let quad = chi.space.quadrature(6);
    let mut refer = 0.0;
    for (q, &x) in quad.points.iter().enumerate() {
        let (_, f) = eval_map(&chi, x).unwrap();
        let mv = eval_vector(&m, x).unwrap();
        let fm = f * nalgebra::Vector2::new(mv[0], mv[1]);
        refer += quad.weights[q] * fm.norm_squared() / f.determinant();
    }
    assert!(((spatial - refer) / refer).abs() < 0.02, "{spatial} {refer}");
}

#[test]
fn overlapping_map_is_rejected() {
    let chi = double_annulus();
    let m = field(chi.space.mesh.clone(), |_| vec![1.0, 0.0]);
    let grid = SpatialGrid::new([-3.0, -3.0], [3.0, 3.0], [64, 64], 1.0, PotentialBoundary::Robin).unwrap();
    let err = push_forward_magnetization(&chi, &m, &grid).unwrap_err();
    assert!(matches!(err, Error::NonInjective { .. }), "{err:?}");
    let fold = field(Mesh::rect([-1.0, 0.0], [1.0, 1.0], [4, 2]).unwrap(), |x| vec![x[0] * x[0], x[1]]);
    let m2 = field(fold.space.mesh.clone(), |_| vec![1.0, 0.0]);
    assert!(matches!(push_forward_magnetization(&fold, &m2, &grid), Err(Error::DegenerateDeformation { .. })));
}

#[test]
fn gap_vanishes_for_injective_maps() {
    let opts = GapOptions::default();
    let id = field(Mesh::unit_square(4), |x| vec![x[0], x[1]]);
    let r = ciarlet_necas_gap(&id, &opts);
    assert!(r.gap.abs() < 1e-3 && (r.integral_j - 1.0).abs() < 1e-9, "{r:?}");
    let aff = field(Mesh::unit_square(4), |x| vec![2.0 * x[0] + 0.3 * x[1], x[1]]);
    let r = ciarlet_necas_gap(&aff, &opts);
    assert!(r.gap.abs() < 2e-3 && (r.integral_j - 2.0).abs() < 1e-9, "{r:?}");
    let (c, s) = (0.8f64, 0.6f64);
    let rigid = field(Mesh::unit_square(4), |x| {
        let y = [1.3 * x[0] + 0.1 * x[1] * x[1], x[1]];
        vec![c * y[0] - s * y[1] + 5.0, s * y[0] + c * y[1] - 2.0]
    });
    let r = ciarlet_necas_gap(&rigid, &opts);
    assert!(r.gap.abs() < 2e-3, "{r:?}");
}

#[test]
fn gap_of_double_cover_matches_area() {
    let chi = double_annulus();
    let opts = GapOptions { samples: 1_000_000, ..GapOptions::default() };
    let r = ciarlet_necas_gap(&chi, &opts);
    let area = annulus_area();
    assert!((r.integral_j - 2.0 * area).abs() < 0.01 * 2.0 * area, "{r:?}");
    assert!((r.gap - area).abs() < 0.01 * area, "{r:?} vs {area}");
    assert!((r.raster_measure - area).abs() < 0.05 * area, "{r:?}");
}

#[test]
fn pull_back_examples() {
    let id = field(Mesh::unit_square(2), |x| vec![x[0], x[1]]);
    let h = pull_back_external_field(&id, &|z| [z[1], -z[0]]).unwrap();
    let pts = id.space.default_quadrature().points;
    for (v, x) in h.iter().zip(&pts) {
        assert!((v[0] - x[1]).abs() < 1e-12 && (v[1] + x[0]).abs() < 1e-12);
    }
    let st = field(Mesh::unit_square(2), |x| vec![2.0 * x[0], x[1]]);
    let h = pull_back_external_field(&st, &|_| [0.0, 1.0]).unwrap();
    assert!(h.iter().all(|v| v[0].abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12));
    let h = pull_back_external_field(&st, &|_| [1.0, 0.0]).unwrap();
    assert!(h.iter().all(|v| (v[0] - 2.0).abs() < 1e-12 && v[1].abs() < 1e-12));
}

#[test]
fn zeeman_energy_agrees_in_both_frames() {
    let chi = field(Mesh::unit_square(4), |x| vec![1.2 * x[0] + 0.1 * x[1] * x[1], x[1] + 0.1 * x[0]]);
    let m = field(Mesh::unit_square(4), |x| vec![1.0, x[0]]);
    let hsp = |z: [f64; 2]| [0.3 + 0.2 * z[1], 1.0 - 0.1 * z[0]];
    let he = pull_back_external_field(&chi, &hsp).unwrap();
    let quad = chi.space.default_quadrature();
    let mut refer = 0.0;
    for (q, &x) in quad.points.iter().enumerate() {
        let mv = eval_vector(&m, x).unwrap();
        refer += quad.weights[q] * (he[q][0] * mv[0] + he[q][1] * mv[1]);
    }
    let grid = unit_grid(256);
    let mb = push_forward_magnetization(&chi, &m, &grid).unwrap();
    let spatial = spatial_zeeman(&grid, &mb, &hsp);
    assert!(((spatial - refer) / refer).abs() < 0.01, "{spatial} {refer}");
}

#[test]
fn referential_energy_matches_spatial_energy() {
    let chi = field(Mesh::unit_square(4), |x| vec![x[0] + 0.1 * x[1] * x[1], x[1]]);
    let m = field(Mesh::unit_square(4), |_| vec![1.0, 0.0]);
    let grid = unit_grid(256);
    let mb = push_forward_magnetization(&chi, &m, &grid).unwrap();
    let sol = solve_scalar_potential(&mb, &grid).unwrap();
    let e_ref = referential_energy(&chi, &m, &sol, &grid).unwrap();
    assert!(((e_ref - sol.energy) / sol.energy).abs() < 0.03, "{e_ref} {}", sol.energy);
}

#[test]
fn deposition_preserves_moments_and_gradient_is_consistent() {
    let grid = SpatialGrid::new([-2.0, -2.0], [2.0, 2.0], [32, 32], 1.0, PotentialBoundary::Robin).unwrap();
    let pos: Vec<[f64; 2]> = (0..20).map(|k| [0.05 * k as f64 - 0.5, 0.3 * (k as f64).sin()]).collect();
    let mom: Vec<[f64; 2]> = (0..20).map(|k| [0.1, 0.05 * (k as f64).cos()]).collect();
    let mb = deposit_moments(&grid, &pos, &mom).unwrap();
    let total: [f64; 2] = mb.iter().fold([0.0; 2], |a, v| [a[0] + v[0], a[1] + v[1]]);
    let area = grid.cell_area();
    let want: [f64; 2] = mom.iter().fold([0.0; 2], |a, v| [a[0] + v[0], a[1] + v[1]]);
    assert!((total[0] * area - want[0]).abs() < 1e-12 && (total[1] * area - want[1]).abs() < 1e-12);

    let op = PoissonOperator::new(&grid);
    let de = deposited_energy(&op, &pos, &mom, None).unwrap();
    let h = 1e-5;
    for k in [0, 7, 13] {
        for a in 0..2 {
            let mut p = pos.clone();
            p[k][a] += h;
            let ep = deposited_energy(&op, &p, &mom, None).unwrap().energy;
            p[k][a] -= 2.0 * h;
            let em = deposited_energy(&op, &p, &mom, None).unwrap().energy;
            let fd = (ep - em) / (2.0 * h);
            assert!(
                (fd - de.d_position[k][a]).abs() < 1e-5 * de.d_position[k][a].abs().max(1e-3),
                "{fd} {}",
                de.d_position[k][a]
            );
            let mut m = mom.clone();
            m[k][a] += h;
            let ep = deposited_energy(&op, &pos, &m, None).unwrap().energy;
            m[k][a] -= 2.0 * h;
            let em = deposited_energy(&op, &pos, &m, None).unwrap().energy;
            let fd = (ep - em) / (2.0 * h);
            assert!(
                (fd - de.d_moment[k][a]).abs() < 1e-6 * de.d_moment[k][a].abs().max(1e-3),
                "{fd} {}",
                de.d_moment[k][a]
            );
        }
    }
}
