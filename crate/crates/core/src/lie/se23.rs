//! Extended poses: SE₂(3) elements and their tangent vectors.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix3x2, Matrix5};

use super::{left_jacobian, skew, unskew, LieError, Rot3, Vec3};
use crate::Real;

/// SE₂(3) element `[[R, V], [0, I₂]]` with `V = [v | p]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SE23Element<T: Real> {
    pub rotation: Rot3<T>,
    /// Column 0 is velocity, column 1 is position.
    pub vblock: Matrix3x2<T>,
}

/// se₂(3) element `[[Ω^, W], [0, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SE23Tangent<T: Real> {
    pub omega: Vec3<T>,
    pub wblock: Matrix3x2<T>,
}

impl<T: Real> SE23Element<T> {
    pub fn new(rotation: Rot3<T>, vblock: Matrix3x2<T>) -> Self {
        Self { rotation, vblock }
    }

    pub fn identity() -> Self {
        Self::new(Rot3::identity(), Matrix3x2::zeros())
    }

    pub fn from_parts(rotation: Rot3<T>, velocity: Vec3<T>, position: Vec3<T>) -> Self {
        Self::new(rotation, Matrix3x2::from_columns(&[velocity, position]))
    }

    pub fn velocity(&self) -> Vec3<T> {
        self.vblock.column(0).into_owned()
    }

    pub fn position(&self) -> Vec3<T> {
        self.vblock.column(1).into_owned()
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self::new(
            self.rotation * other.rotation,
            self.rotation.matrix() * other.vblock + self.vblock,
        )
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -(rt.matrix() * self.vblock))
    }

    pub fn exp(xi: &SE23Tangent<T>) -> Self {
        exp_se23(xi)
    }

    pub fn to_matrix(&self) -> Matrix5<T> {
        let mut m = Matrix5::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 2>(0, 3).copy_from(&self.vblock);
        m
    }

    /// Reads an embedded 5×5 matrix, validating the fixed rows and the rotation.
    pub fn from_matrix(m: &Matrix5<T>) -> Result<Self, LieError> {
        let bottom = m.fixed_view::<2, 5>(3, 0);
        let mut expected = nalgebra::Matrix2x5::zeros();
        expected[(0, 3)] = T::one();
        expected[(1, 4)] = T::one();
        let deviation = (bottom - expected).norm().as_f64();
        if deviation > 1e-12 || !deviation.is_finite() {
            return Err(LieError::NotElement { deviation });
        }
        let rotation = Rot3::from_matrix(m.fixed_view::<3, 3>(0, 0).into_owned())?;
        Ok(Self::new(rotation, m.fixed_view::<3, 2>(0, 3).into_owned()))
    }

    /// Projects the rotation block back onto SO(3) when it has drifted.
    pub fn renormalized(self) -> Self {
        Self::new(
            self.rotation.renormalized(T::lit(super::ORTHONORMALITY_TOL)),
            self.vblock,
        )
    }

    pub fn cast<U: Real>(&self) -> SE23Element<U> {
        SE23Element::new(self.rotation.cast(), self.vblock.map(|x| U::lit(x.as_f64())))
    }
}

impl<T: Real> Mul for SE23Element<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.compose(&rhs)
    }
}

impl<T: Real> SE23Tangent<T> {
    pub fn new(omega: Vec3<T>, wblock: Matrix3x2<T>) -> Self {
        Self { omega, wblock }
    }

    pub fn zero() -> Self {
        Self::new(Vec3::zeros(), Matrix3x2::zeros())
    }

    pub fn to_matrix(&self) -> Matrix5<T> {
        let mut m = Matrix5::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&self.omega));
        m.fixed_view_mut::<3, 2>(0, 3).copy_from(&self.wblock);
        m
    }

    /// Reads an embedded 5×5 matrix; the bottom rows must vanish.
    pub fn from_matrix(m: &Matrix5<T>) -> Result<Self, LieError> {
        let deviation = m.fixed_view::<2, 5>(3, 0).norm().as_f64();
        if deviation > 1e-12 || !deviation.is_finite() {
            return Err(LieError::NotElement { deviation });
        }
        let rot: Matrix3<T> = m.fixed_view::<3, 3>(0, 0).into_owned();
        Ok(Self::new(unskew(&rot)?, m.fixed_view::<3, 2>(0, 3).into_owned()))
    }

    pub fn norm(&self) -> T {
        (self.omega.norm_squared() + self.wblock.norm_squared()).sqrt()
    }

    pub fn exp(&self) -> SE23Element<T> {
        exp_se23(self)
    }
}

impl<T: Real> Add for SE23Tangent<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.omega + rhs.omega, self.wblock + rhs.wblock)
    }
}

impl<T: Real> Sub for SE23Tangent<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.omega - rhs.omega, self.wblock - rhs.wblock)
    }
}

impl<T: Real> Neg for SE23Tangent<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.omega, -self.wblock)
    }
}

impl<T: Real> Mul<T> for SE23Tangent<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.omega * s, self.wblock * s)
    }
}

/// Closed-form exponential: Rodrigues rotation and the left Jacobian applied
/// to each column of W.
pub fn exp_se23<T: Real>(xi: &SE23Tangent<T>) -> SE23Element<T> {
    SE23Element::new(super::exp_so3(&xi.omega), left_jacobian(&xi.omega) * xi.wblock)
}
