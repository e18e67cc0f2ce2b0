//! Fixed-size 2-D tensor helpers. Fourth-order objects act on matrices
//! flattened row-major (index 2i + j for entry (i, j)).

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

pub type Mat2 = Matrix2<f64>;
pub type Vec2 = Vector2<f64>;

pub fn cof(f: &Mat2) -> Mat2 {
    Mat2::new(f[(1, 1)], -f[(1, 0)], -f[(0, 1)], f[(0, 0)])
}

pub fn flat(a: &Mat2) -> Vector4<f64> {
    Vector4::new(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)])
}

pub fn unflat(v: &Vector4<f64>) -> Mat2 {
    Mat2::new(v[0], v[1], v[2], v[3])
}

/// Second derivative of det F with respect to F (constant in 2-D).
pub fn det_hessian() -> Matrix4<f64> {
    let mut h = Matrix4::zeros();
    h[(0, 3)] = 1.0;
    h[(3, 0)] = 1.0;
    h[(1, 2)] = -1.0;
    h[(2, 1)] = -1.0;
    h
}

pub fn frob(a: &Mat2, b: &Mat2) -> f64 {
    a.component_mul(b).sum()
}

pub fn rotation(angle: f64) -> Mat2 {
    let (s, c) = angle.sin_cos();
    Mat2::new(c, -s, s, c)
}
