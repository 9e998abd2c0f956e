//! Rotations stored as 3×3 matrices.

use std::ops::Mul;

use nalgebra::Matrix3;

use super::{skew, LieError, Vec3, ORTHONORMALITY_TOL};
use crate::Real;

const SMALL_ANGLE: f64 = 1e-6;

/// Element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot3<T: Real>(Matrix3<T>);

impl<T: Real> Rot3<T> {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates orthonormality and orientation to [`ORTHONORMALITY_TOL`].
    pub fn from_matrix(m: Matrix3<T>) -> Result<Self, LieError> {
        let rot = Self(m);
        let error = rot.orthonormality_error().as_f64();
        let det = m.determinant().as_f64();
        if error > ORTHONORMALITY_TOL || (det - 1.0).abs() > ORTHONORMALITY_TOL || !error.is_finite() {
            return Err(LieError::NotRotation { error, det });
        }
        Ok(rot)
    }

    /// Wraps a matrix the caller knows to be a rotation.
    pub fn from_matrix_unchecked(m: Matrix3<T>) -> Self {
        Self(m)
    }

    /// Nearest rotation in Frobenius norm (polar factor of the SVD).
    pub fn from_matrix_projected(m: Matrix3<T>) -> Self {
        let svd = m.svd(true, true);
        let (mut u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        if (u * vt).determinant() < T::zero() {
            u.column_mut(2).neg_mut();
        }
        Self(u * vt)
    }

    pub fn exp(omega: &Vec3<T>) -> Self {
        exp_so3(omega)
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix3<T> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    pub fn trace(&self) -> T {
        self.0.trace()
    }

    /// Frobenius norm of RᵀR − I.
    pub fn orthonormality_error(&self) -> T {
        (self.0.transpose() * self.0 - Matrix3::identity()).norm()
    }

    /// Re-projects onto SO(3) when the orthonormality drift exceeds `tol`.
    pub fn renormalized(self, tol: T) -> Self {
        if self.orthonormality_error() > tol {
            Self::from_matrix_projected(self.0)
        } else {
            self
        }
    }

    /// Geodesic angle between two rotations, in [0, π].
    ///
    /// Evaluated as atan2(sin θ, cos θ) from the antisymmetric and trace parts
    /// of RR̂ᵀ, which stays accurate near 0 where arccos of the trace does not.
    pub fn angle_to(&self, other: &Self) -> T {
        let m = self.0 * other.0.transpose();
        let half = T::lit(0.5);
        let sin = Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]).norm() * half;
        let cos = (m.trace() - T::one()) * half;
        sin.atan2(cos)
    }

    pub fn cast<U: Real>(&self) -> Rot3<U> {
        Rot3(self.0.map(|x| U::lit(x.as_f64())))
    }
}

impl<T: Real> Mul for Rot3<T> {
    type Output = Rot3<T>;
    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl<T: Real> Mul<Vec3<T>> for Rot3<T> {
    type Output = Vec3<T>;
    fn mul(self, rhs: Vec3<T>) -> Vec3<T> {
        self.0 * rhs
    }
}

impl<T: Real> Mul<&Vec3<T>> for &Rot3<T> {
    type Output = Vec3<T>;
    fn mul(self, rhs: &Vec3<T>) -> Vec3<T> {
        self.0 * rhs
    }
}

/// Rodrigues exponential. Uses a series below an angle of 1e-6.
pub fn exp_so3<T: Real>(omega: &Vec3<T>) -> Rot3<T> {
    let w = skew(omega);
    let w2 = w * w;
    let theta = omega.norm();
    let i = Matrix3::identity();
    if theta.as_f64() < SMALL_ANGLE {
        let w3 = w2 * w;
        return Rot3(i + w + w2 * T::lit(0.5) + w3 * T::lit(1.0 / 6.0));
    }
    let half = theta * T::lit(0.5);
    let a = theta.sin() / theta;
    // 1 − cos θ written as 2 sin²(θ/2) to avoid cancellation.
    let b = T::lit(2.0) * half.sin() * half.sin() / (theta * theta);
    Rot3(i + w * a + w2 * b)
}

/// Left Jacobian of SO(3): Σ (ω^)ᵏ / (k+1)!.
pub fn left_jacobian<T: Real>(omega: &Vec3<T>) -> Matrix3<T> {
    let w = skew(omega);
    let w2 = w * w;
    let theta = omega.norm();
    let i = Matrix3::identity();
    if theta.as_f64() < SMALL_ANGLE {
        let w3 = w2 * w;
        return i + w * T::lit(0.5) + w2 * T::lit(1.0 / 6.0) + w3 * T::lit(1.0 / 24.0);
    }
    let half = theta * T::lit(0.5);
    let t2 = theta * theta;
    let b = T::lit(2.0) * half.sin() * half.sin() / t2;
    let c = (theta - theta.sin()) / (t2 * theta);
    i + w * b + w2 * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn taylor_exp3(m: &Matrix3<f64>) -> Matrix3<f64> {
        let mut term = Matrix3::identity();
        let mut sum = Matrix3::identity();
        for k in 1..60 {
            term = term * m / k as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(exp_so3(&Vec3::<f64>::zeros()), Rot3::identity());
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = exp_so3(&(Vec3::z() * (PI / 2.0)));
        assert!((r * Vec3::x() - Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn near_antipodal_trace_matches_series() {
        let omega = Vec3::x() * (0.99 * PI);
        let series = taylor_exp3(&skew(&omega));
        let r = exp_so3(&omega);
        assert!((r.trace() - series.trace()).abs() < 1e-12);
        assert!((r.trace() - (-0.999013)).abs() < 1e-6);
    }

    #[test]
    fn small_angle_branch_is_continuous() {
        let dir = Vec3::new(0.3, -0.5, 0.8).normalize();
        let below = exp_so3(&(dir * 0.999e-6));
        let above = exp_so3(&(dir * 1.001e-6));
        let series = taylor_exp3(&skew(&(dir * 1.001e-6)));
        assert!((above.matrix() - series).norm() < 1e-15);
        assert!((below.matrix() - above.matrix()).norm() < 1e-8);
        let j = left_jacobian(&(dir * 0.999e-6));
        let j2 = left_jacobian(&(dir * 1.001e-6));
        assert!((j - j2).norm() < 1e-8);
    }

    #[test]
    fn left_jacobian_matches_series() {
        let omega = Vec3::new(1.1, -0.4, 2.0);
        let w = skew(&omega);
        let mut term = Matrix3::identity();
        let mut sum = Matrix3::identity();
        for k in 1..60 {
            term = term * w / (k + 1) as f64;
            sum += term;
        }
        assert!((left_jacobian(&omega) - sum).norm() < 1e-12);
    }

    #[test]
    fn projection_restores_orthonormality() {
        let r = exp_so3(&Vec3::new(0.2, 0.4, -1.0));
        let noisy: Matrix3<f64> = r.matrix() + Matrix3::new(1e-6, 0.0, 2e-6, 0.0, -1e-6, 0.0, 3e-6, 0.0, 0.0);
        let fixed = Rot3::from_matrix_projected(noisy);
        assert!(fixed.orthonormality_error() < 1e-14);
        assert!((fixed.matrix().determinant() - 1.0).abs() < 1e-14);
        assert!(Rot3::from_matrix(noisy).is_err());
        assert!(Rot3::from_matrix(*fixed.matrix()).is_ok());
    }

    #[test]
    fn angle_to_is_symmetric() {
        let a = exp_so3(&Vec3::new(0.1, 0.2, 0.3));
        let b = a * exp_so3(&(Vec3::x() * (0.99 * PI)));
        assert!((a.angle_to(&b) - 0.99 * PI).abs() < 1e-9);
        assert!((a.angle_to(&b) - b.angle_to(&a)).abs() < 1e-15);
        assert_eq!(a.angle_to(&a), 0.0);
    }
}
