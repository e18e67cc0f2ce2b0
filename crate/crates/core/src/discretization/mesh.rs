use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary facet of a box domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Facet {
    Left,
    Right,
    Bottom,
    Top,
}

impl Facet {
    pub fn parse(s: &str) -> Result<Facet> {
        match s {
            "left" => Ok(Facet::Left),
            "right" => Ok(Facet::Right),
            "bottom" => Ok(Facet::Bottom),
            "top" => Ok(Facet::Top),
            other => Err(Error::UnknownTag(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Facet::Left => "left",
            Facet::Right => "right",
            Facet::Bottom => "bottom",
            Facet::Top => "top",
        }
    }

    /// Axis normal to the facet and whether it is the upper end.
    pub fn axis(self) -> (usize, bool) {
        match self {
            Facet::Left => (0, false),
            Facet::Right => (0, true),
            Facet::Bottom => (1, false),
            Facet::Top => (1, true),
        }
    }
}

/// Structured mesh of a box in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub dim: usize,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub cells: [usize; 2],
}

impl Mesh {
    pub fn new(dim: usize, lo: [f64; 2], hi: [f64; 2], cells: [usize; 2]) -> Result<Mesh> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidInput(format!("mesh dimension must be 1 or 2, got {dim}")));
        }
        for ax in 0..dim {
            if !(hi[ax] > lo[ax]) {
                return Err(Error::InvalidInput(format!("non-positive extent on axis {ax}")));
            }
            if cells[ax] < 2 {
                return Err(Error::InvalidInput(format!("need at least 2 cells on axis {ax}")));
            }
        }
        let (lo, hi, cells) = if dim == 1 { ([lo[0], 0.0], [hi[0], 1.0], [cells[0], 1]) } else { (lo, hi, cells) };
        Ok(Mesh { dim, lo, hi, cells })
    }

    pub fn interval(a: f64, b: f64, cells: usize) -> Result<Mesh> {
        Mesh::new(1, [a, 0.0], [b, 1.0], [cells, 1])
    }

    pub fn rect(lo: [f64; 2], hi: [f64; 2], cells: [usize; 2]) -> Result<Mesh> {
        Mesh::new(2, lo, hi, cells)
    }

    pub fn unit_square(n: usize) -> Mesh {
        Mesh::new(2, [0.0, 0.0], [1.0, 1.0], [n, n]).expect("valid unit square")
    }

    pub fn h(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.cells[axis] as f64
    }

    pub fn n_cells(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|a| self.hi[a] - self.lo[a]).product()
    }

    /// All boundary facets; they partition the boundary.
    pub fn facets(&self) -> Vec<Facet> {
        if self.dim == 1 {
            vec![Facet::Left, Facet::Right]
        } else {
            vec![Facet::Left, Facet::Right, Facet::Bottom, Facet::Top]
        }
    }

    pub fn has_facet(&self, f: Facet) -> bool {
        self.dim == 2 || f.axis().0 == 0
    }

    /// (d−1)-dimensional measure of a facet (1 for end points in 1-D).
    pub fn facet_measure(&self, f: Facet) -> f64 {
        if self.dim == 1 {
            1.0
        } else {
            let other = 1 - f.axis().0;
            self.hi[other] - self.lo[other]
        }
    }

    pub fn contains(&self, x: [f64; 2], tol: f64) -> bool {
        (0..self.dim).all(|a| x[a] >= self.lo[a] - tol && x[a] <= self.hi[a] + tol)
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim).map(|a| (self.hi[a] - self.lo[a]).powi(2)).sum::<f64>().sqrt()
    }

    /// The mesh with every cell split in two along each axis.
    pub fn refined(&self) -> Mesh {
        let mut m = self.clone();
        for a in 0..self.dim {
            m.cells[a] *= 2;
        }
        m
    }
}
