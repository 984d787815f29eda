//! Small fixed-size linear algebra: 3-vectors, SO(3) rotations and 2×2 unitaries.
//!
//! Everything here is `Copy` and allocation-free; the filter and Monte-Carlo
//! kernels call these in their innermost loops.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

pub const X_HAT: Vec3 = [1.0, 0.0, 0.0];
pub const Y_HAT: Vec3 = [0.0, 1.0, 0.0];
pub const Z_HAT: Vec3 = [0.0, 0.0, 1.0];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// A proper rotation of ℝ³ stored as a row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation3(pub [[f64; 3]; 3]);

impl Rotation3 {
    pub const IDENTITY: Rotation3 = Rotation3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Right-handed rotation by `angle` about the unit vector `axis` (Rodrigues).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let [x, y, z] = *axis;
        Rotation3([
            [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
            [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
            [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
        ])
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &Rotation3) -> Rotation3 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Rotation3(out)
    }

    pub fn transpose(&self) -> Rotation3 {
        let a = &self.0;
        Rotation3([
            [a[0][0], a[1][0], a[2][0]],
            [a[0][1], a[1][1], a[2][1]],
            [a[0][2], a[1][2], a[2][2]],
        ])
    }

    /// The inverse of a rotation is its transpose.
    pub fn inverse(&self) -> Rotation3 {
        self.transpose()
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        let a = &self.0;
        [dot(&a[0], v), dot(&a[1], v), dot(&a[2], v)]
    }

    /// Apply the transpose without materialising it.
    pub fn apply_transpose(&self, v: &Vec3) -> Vec3 {
        let a = &self.0;
        [
            a[0][0] * v[0] + a[1][0] * v[1] + a[2][0] * v[2],
            a[0][1] * v[0] + a[1][1] * v[1] + a[2][1] * v[2],
            a[0][2] * v[0] + a[1][2] * v[1] + a[2][2] * v[2],
        ]
    }

    pub fn determinant(&self) -> f64 {
        let a = &self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    /// Largest entry of |RᵀR − I|.
    pub fn orthogonality_defect(&self) -> f64 {
        let p = self.transpose().compose(self);
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p.0[i][j] - target).abs());
            }
        }
        worst
    }

    pub fn is_proper_rotation(&self, tol: f64) -> bool {
        self.orthogonality_defect() <= tol && (self.determinant() - 1.0).abs() <= tol
    }

    pub fn max_abs_diff(&self, other: &Rotation3) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }
}

/// A 2×2 complex matrix, used for SU(2) propagators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[C1, C0], [C0, C1]]);

    pub fn pauli_x() -> Mat2 {
        Mat2([[C0, C1], [C1, C0]])
    }

    pub fn pauli_y() -> Mat2 {
        Mat2([[C0, -CI], [CI, C0]])
    }

    pub fn pauli_z() -> Mat2 {
        Mat2([[C1, C0], [C0, -C1]])
    }

    /// `exp(-i v·σ)` for a real 3-vector `v` (rotation by 2|v| about v̂).
    pub fn exp_pauli(v: &Vec3) -> Mat2 {
        let theta = norm(v);
        let (s, c) = theta.sin_cos();
        // sin(θ)/θ, stable near zero
        let sinc = if theta < 1e-8 { 1.0 - theta * theta / 6.0 } else { s / theta };
        let (x, y, z) = (v[0] * sinc, v[1] * sinc, v[2] * sinc);
        Mat2([
            [Complex64::new(c, -z), Complex64::new(-y, -x)],
            [Complex64::new(y, -x), Complex64::new(c, z)],
        ])
    }

    /// `exp(-i angle n·σ / 2)`: the spin-½ rotation by `angle` about unit axis `n`.
    pub fn rotation(axis: &Vec3, angle: f64) -> Mat2 {
        Mat2::exp_pauli(&scale(axis, angle / 2.0))
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }

    pub fn adjoint(&self) -> Mat2 {
        let a = &self.0;
        Mat2([[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: Complex64) -> Mat2 {
        let a = &self.0;
        Mat2([[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]])
    }

    /// Largest entry of |U†U − I|.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { C1 } else { C0 };
                worst = worst.max((p.0[i][j] - target).norm());
            }
        }
        worst
    }

    pub fn check_unitary(&self, tol: f64) -> Result<()> {
        let d = self.unitarity_defect();
        if d.is_finite() && d <= tol {
            Ok(())
        } else {
            Err(Error::NonUnitary(d))
        }
    }

    /// Re-project onto U(2) by a Gram–Schmidt pass over the columns.
    pub fn reunitarize(&self) -> Mat2 {
        let a = &self.0;
        let mut c0 = [a[0][0], a[1][0]];
        let n0 = (c0[0].norm_sqr() + c0[1].norm_sqr()).sqrt();
        c0 = [c0[0] / n0, c0[1] / n0];
        let mut c1 = [a[0][1], a[1][1]];
        let proj = c0[0].conj() * c1[0] + c0[1].conj() * c1[1];
        c1 = [c1[0] - proj * c0[0], c1[1] - proj * c0[1]];
        let n1 = (c1[0].norm_sqr() + c1[1].norm_sqr()).sqrt();
        c1 = [c1[0] / n1, c1[1] / n1];
        Mat2([[c0[0], c1[0]], [c0[1], c1[1]]])
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rodrigues_matches_pi_about_x() {
        let r = Rotation3::from_axis_angle(&X_HAT, PI);
        let expect = Rotation3([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]);
        assert!(r.max_abs_diff(&expect) < 1e-15);
        assert!(r.is_proper_rotation(1e-12));
    }

    #[test]
    fn exp_pauli_is_unitary_and_traces_to_cosine() {
        let v = [0.3, -0.2, 0.7];
        let u = Mat2::exp_pauli(&v);
        assert!(u.unitarity_defect() < 1e-14);
        assert!((u.trace().re - 2.0 * norm(&v).cos()).abs() < 1e-14);
        assert!(u.trace().im.abs() < 1e-14);
    }

    #[test]
    fn spin_half_rotation_by_pi_about_x_is_minus_i_sigma_x() {
        let u = Mat2::rotation(&X_HAT, PI);
        let expect = Mat2::pauli_x().scale(Complex64::new(0.0, -1.0));
        assert!(u.max_abs_diff(&expect) < 1e-15);
    }
}
