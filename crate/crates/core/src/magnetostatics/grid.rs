use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation condition for the whole-space potential problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PotentialBoundary {
    /// ∂_nφ + n·(z−c)/|z−c|² φ = 0, exact for a dipole centred at c.
    #[default]
    Robin,
    ZeroDirichlet,
}

/// Uniform spatial grid on a truncation box; the potential lives on the
/// nodes, the magnetization on the cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub cells: [usize; 2],
    pub mu0: f64,
    pub boundary: PotentialBoundary,
}

impl SpatialGrid {
    pub fn new(
        lo: [f64; 2],
        hi: [f64; 2],
        cells: [usize; 2],
        mu0: f64,
        boundary: PotentialBoundary,
    ) -> Result<SpatialGrid> {
        if cells[0] < 2 || cells[1] < 2 {
            return Err(Error::InvalidInput("spatial grid needs at least 2 cells per axis".into()));
        }
        if !(hi[0] > lo[0] && hi[1] > lo[1]) {
            return Err(Error::InvalidInput("spatial grid box is empty".into()));
        }
        if !(mu0 > 0.0) {
            return Err(Error::InvalidInput("mu0 must be positive".into()));
        }
        Ok(SpatialGrid { lo, hi, cells, mu0, boundary })
    }

    /// Box around [lo, hi] padded on every side by `margin` times the half
    /// extent of the image (so margin 4 around a disk of radius R pads 4R).
    pub fn around(
        lo: [f64; 2],
        hi: [f64; 2],
        margin: f64,
        cells: usize,
        mu0: f64,
        boundary: PotentialBoundary,
    ) -> Result<SpatialGrid> {
        if !(margin >= 2.0) {
            return Err(Error::InvalidInput(format!("margin factor {margin} is below one image diameter (2)")));
        }
        let half = 0.5 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        let r = half * (1.0 + margin);
        SpatialGrid::new([c[0] - r, c[1] - r], [c[0] + r, c[1] + r], [cells, cells], mu0, boundary)
    }

    pub fn h(&self) -> [f64; 2] {
        [(self.hi[0] - self.lo[0]) / self.cells[0] as f64, (self.hi[1] - self.lo[1]) / self.cells[1] as f64]
    }

    pub fn cell_area(&self) -> f64 {
        let h = self.h();
        h[0] * h[1]
    }

    pub fn n_cells(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn n_nodes(&self) -> usize {
        (self.cells[0] + 1) * (self.cells[1] + 1)
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.cells[0] + 1) + i
    }

    pub fn node(&self, k: usize) -> [f64; 2] {
        let n = self.cells[0] + 1;
        let h = self.h();
        [self.lo[0] + (k % n) as f64 * h[0], self.lo[1] + (k / n) as f64 * h[1]]
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.cells[0] + i
    }

    pub fn cell_center(&self, c: usize) -> [f64; 2] {
        let h = self.h();
        let (i, j) = (c % self.cells[0], c / self.cells[0]);
        [self.lo[0] + (i as f64 + 0.5) * h[0], self.lo[1] + (j as f64 + 0.5) * h[1]]
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.lo[0] + self.hi[0]), 0.5 * (self.lo[1] + self.hi[1])]
    }

    pub fn cell_of(&self, z: [f64; 2]) -> Option<[usize; 2]> {
        let h = self.h();
        let fx = (z[0] - self.lo[0]) / h[0];
        let fy = (z[1] - self.lo[1]) / h[1];
        if !(fx >= 0.0 && fy >= 0.0 && fx <= self.cells[0] as f64 && fy <= self.cells[1] as f64) {
            return None;
        }
        Some([(fx as usize).min(self.cells[0] - 1), (fy as usize).min(self.cells[1] - 1)])
    }

    /// True when [lo, hi] lies inside the box with `pad` cells to spare.
    pub fn contains_box(&self, lo: [f64; 2], hi: [f64; 2], pad: f64) -> bool {
        let h = self.h();
        (0..2).all(|a| lo[a] - pad * h[a] > self.lo[a] && hi[a] + pad * h[a] < self.hi[a])
    }
}
