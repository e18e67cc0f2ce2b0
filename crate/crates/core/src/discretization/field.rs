use std::io::Write;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::assembly::{load_vector, mass};
use super::space::{SpaceHeader, SplineSpace};
use crate::error::{Error, Result};
use crate::linalg::solve_dense;

/// Which derivative [`evaluate`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    Value,
    Gradient,
    Hessian,
    Laplacian,
}

impl Derivative {
    fn order(self) -> usize {
        match self {
            Derivative::Value => 0,
            Derivative::Gradient => 1,
            Derivative::Hessian | Derivative::Laplacian => 2,
        }
    }
}

/// Spline field with `rank` components; coefficients are stored component
/// by component.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub space: Arc<SplineSpace>,
    pub coeffs: Vec<f64>,
    pub rank: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FieldHeader {
    #[serde(flatten)]
    pub space: SpaceHeader,
    pub rank: usize,
    pub len: usize,
    pub encoding: String,
}

impl DiscreteField {
    pub fn new(space: Arc<SplineSpace>, coeffs: Vec<f64>, rank: usize) -> Result<DiscreteField> {
        if coeffs.len() != space.len() * rank {
            return Err(Error::InvalidInput(format!(
                "field has {} coefficients, basis needs {} x {}",
                coeffs.len(),
                space.len(),
                rank
            )));
        }
        Ok(DiscreteField { space, coeffs, rank })
    }

    pub fn zeros(space: Arc<SplineSpace>, rank: usize) -> DiscreteField {
        let n = space.len() * rank;
        DiscreteField { space, coeffs: vec![0.0; n], rank }
    }

    /// L² projection of `f` (returning `rank` components) onto the space.
    /// Exact for functions that already lie in the space.
    pub fn project<F: Fn([f64; 2]) -> Vec<f64>>(space: Arc<SplineSpace>, rank: usize, f: F) -> Result<DiscreteField> {
        let quad = space.quadrature(space.degree + 2);
        let m = mass(&space, &quad).to_dense();
        let samples: Vec<Vec<f64>> = quad.points.iter().map(|&x| f(x)).collect();
        let n = space.len();
        let mut coeffs = vec![0.0; n * rank];
        let ch = m.cholesky().ok_or_else(|| Error::SolverDivergence("mass matrix not spd".into()))?;
        for c in 0..rank {
            let vals: Vec<f64> = samples.iter().map(|s| s[c]).collect();
            let rhs = load_vector(n, &quad, &vals);
            let sol = ch.solve(&rhs);
            coeffs[c * n..(c + 1) * n].copy_from_slice(sol.as_slice());
        }
        Ok(DiscreteField { space, coeffs, rank })
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.space.len();
        &self.coeffs[c * n..(c + 1) * n]
    }

    /// Re-expands the field on the uniformly refined (nested) space.
    pub fn refine(&self) -> Result<DiscreteField> {
        let fine = Arc::new(self.space.refined());
        let quad = fine.quadrature(fine.degree + 1);
        let m = mass(&fine, &quad).to_dense();
        let n = fine.len();
        let mut coeffs = vec![0.0; n * self.rank];
        for c in 0..self.rank {
            let coarse = self.component(c);
            let vals: Vec<f64> = quad
                .points
                .iter()
                .map(|&x| {
                    let e = self.space.eval(x, 0).expect("quadrature point inside");
                    e.idx.iter().zip(&e.val).map(|(i, v)| v * coarse[*i]).sum()
                })
                .collect();
            let rhs = load_vector(n, &quad, &vals);
            let sol: DVector<f64> = solve_dense(&m, &rhs)?;
            coeffs[c * n..(c + 1) * n].copy_from_slice(sol.as_slice());
        }
        Ok(DiscreteField { space: fine, coeffs, rank: self.rank })
    }

    pub fn header(&self) -> FieldHeader {
        FieldHeader { space: self.space.header(), rank: self.rank, len: self.coeffs.len(), encoding: "f64-le".into() }
    }

    /// Writes the coefficients as raw little-endian f64.
    pub fn write_raw<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in &self.coeffs {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_raw(space: Arc<SplineSpace>, rank: usize, bytes: &[u8]) -> Result<DiscreteField> {
        if !bytes.len().is_multiple_of(8) {
            return Err(Error::InvalidInput("raw field length is not a multiple of 8".into()));
        }
        let coeffs = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        DiscreteField::new(space, coeffs, rank)
    }
}

/// Evaluates a field at points. Each returned row holds, per component,
/// the value (1 entry), gradient (d), Hessian (d×d, row-major) or Laplacian (1).
pub fn evaluate(field: &DiscreteField, points: &[[f64; 2]], what: Derivative) -> Result<Vec<Vec<f64>>> {
    let space = &field.space;
    let d = space.dim();
    if what.order() == 2 && space.degree < 3 {
        return Err(Error::UnsupportedOrder { order: 2, needed: 3, degree: space.degree });
    }
    let n = space.len();
    points
        .iter()
        .map(|&x| {
            let e = space.eval(x, what.order())?;
            let mut row = Vec::new();
            for c in 0..field.rank {
                let coef = &field.coeffs[c * n..(c + 1) * n];
                match what {
                    Derivative::Value => row.push(e.idx.iter().zip(&e.val).map(|(i, v)| v * coef[*i]).sum()),
                    Derivative::Gradient => {
                        for a in 0..d {
                            row.push(e.idx.iter().zip(&e.grad).map(|(i, g)| g[a] * coef[*i]).sum());
                        }
                    }
                    Derivative::Hessian => {
                        let h: [f64; 3] = e.idx.iter().zip(&e.hess).fold([0.0; 3], |mut acc, (i, h)| {
                            for k in 0..3 {
                                acc[k] += h[k] * coef[*i];
                            }
                            acc
                        });
                        if d == 1 {
                            row.push(h[0]);
                        } else {
                            row.extend([h[0], h[1], h[1], h[2]]);
                        }
                    }
                    Derivative::Laplacian => {
                        row.push(e.idx.iter().zip(&e.hess).map(|(i, h)| (h[0] + h[2]) * coef[*i]).sum())
                    }
                }
            }
            Ok(row)
        })
        .collect()
}
