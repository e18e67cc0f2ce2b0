//! Open uniform B-spline bases in one variable.

/// Open uniform knot vector on `[a, b]` with `cells` equal spans.
#[derive(Debug, Clone, PartialEq)]
pub struct Knots {
    pub degree: usize,
    pub cells: usize,
    pub a: f64,
    pub b: f64,
    pub knots: Vec<f64>,
}

impl Knots {
    pub fn open_uniform(degree: usize, cells: usize, a: f64, b: f64) -> Knots {
        let mut knots = Vec::with_capacity(cells + 2 * degree + 1);
        knots.extend(std::iter::repeat_n(a, degree));
        for i in 0..=cells {
            knots.push(if i == cells { b } else { a + (b - a) * i as f64 / cells as f64 });
        }
        knots.extend(std::iter::repeat_n(b, degree));
        Knots { degree, cells, a, b, knots }
    }

    pub fn n_basis(&self) -> usize {
        self.cells + self.degree
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.cells as f64
    }

    /// Cell containing `x`; the right end point belongs to the last cell.
    pub fn cell_of(&self, x: f64) -> usize {
        let t = ((x - self.a) / self.h()).floor();
        (t.max(0.0) as usize).min(self.cells - 1)
    }

    /// Values and derivatives up to order `nd` of the `degree + 1` functions
    /// active on `cell`, evaluated at `x`. Entry `[k][j]` is the `k`-th
    /// derivative of basis function `cell + j`.
    pub fn ders(&self, x: f64, cell: usize, nd: usize) -> Vec<Vec<f64>> {
        let p = self.degree;
        let span = cell + p;
        let u = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut out = vec![vec![0.0; p + 1]; nd + 1];
        for j in 0..=p {
            out[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nd.min(p) {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                out[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for k in 1..=nd.min(p) {
            for j in 0..=p {
                out[k][j] *= fac;
            }
            fac *= (p - k) as f64;
        }
        out
    }

    /// Greville abscissae, one per basis function.
    pub fn greville(&self) -> Vec<f64> {
        (0..self.n_basis())
            .map(|i| self.knots[i + 1..=i + self.degree].iter().sum::<f64>() / self.degree as f64)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_and_derivative_sums() {
        let k = Knots::open_uniform(3, 5, 0.0, 2.0);
        for i in 0..=50 {
            let x = 2.0 * i as f64 / 50.0;
            let c = k.cell_of(x);
            let d = k.ders(x, c, 3);
            assert!((d[0].iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for order in 1..=3 {
                assert!(d[order].iter().sum::<f64>().abs() < 1e-11);
            }
        }
    }

    #[test]
    fn greville_reproduces_linear_functions() {
        let k = Knots::open_uniform(4, 3, -1.0, 1.0);
        let g = k.greville();
        for i in 0..=20 {
            let x = -1.0 + 0.1 * i as f64;
            let c = k.cell_of(x);
            let d = k.ders(x, c, 1);
            let v: f64 = (0..=4).map(|j| d[0][j] * g[c + j]).sum();
            let dv: f64 = (0..=4).map(|j| d[1][j] * g[c + j]).sum();
            assert!((v - x).abs() < 1e-14);
            assert!((dv - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let k = Knots::open_uniform(3, 4, 0.0, 1.0);
        let x = 0.37;
        let c = k.cell_of(x);
        let h = 1e-6;
        let d = k.ders(x, c, 2);
        let dp = k.ders(x + h, c, 1);
        let dm = k.ders(x - h, c, 1);
        for j in 0..4 {
            assert!(((dp[0][j] - dm[0][j]) / (2.0 * h) - d[1][j]).abs() < 1e-7);
            assert!(((dp[1][j] - dm[1][j]) / (2.0 * h) - d[2][j]).abs() < 1e-5);
        }
    }
}
