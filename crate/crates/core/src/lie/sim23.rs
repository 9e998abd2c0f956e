//! The automorphism group SIM₂(3), its action on SE₂(3), and its algebra.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Matrix5};

use super::{expm5, skew, unskew, LieError, Rot3, SE23Element, SE23Tangent, Vec3, DETERMINANT_FLOOR};
use crate::Real;

/// SIM₂(3) element `[[R, V], [0, A]]` with A ∈ GL(2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SIM23Element<T: Real> {
    pub rotation: Rot3<T>,
    pub vblock: Matrix3x2<T>,
    pub ablock: Matrix2<T>,
}

/// sim₂(3) element `[[Ω^, W], [0, S]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SIM23Tangent<T: Real> {
    pub omega: Vec3<T>,
    pub wblock: Matrix3x2<T>,
    pub sblock: Matrix2<T>,
}

impl<T: Real> SIM23Element<T> {
    /// Builds an element, rejecting a scaling block with |det| below 1e-12.
    pub fn new(rotation: Rot3<T>, vblock: Matrix3x2<T>, ablock: Matrix2<T>) -> Result<Self, LieError> {
        let z = Self { rotation, vblock, ablock };
        z.a_inverse()?;
        Ok(z)
    }

    pub fn identity() -> Self {
        Self {
            rotation: Rot3::identity(),
            vblock: Matrix3x2::zeros(),
            ablock: Matrix2::identity(),
        }
    }

    /// Inverse of the scaling block, or an error when it is near-singular.
    pub fn a_inverse(&self) -> Result<Matrix2<T>, LieError> {
        let det = self.ablock.determinant();
        if !(det.abs().as_f64() > DETERMINANT_FLOOR) {
            return Err(LieError::SingularScaling { det: det.as_f64() });
        }
        let a = &self.ablock;
        Ok(Matrix2::new(a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)]) / det)
    }

    /// Ratio of the singular values of A.
    pub fn condition_number(&self) -> T {
        let s = self.ablock.singular_values();
        let (hi, lo) = (s[0].max(s[1]), s[0].min(s[1]));
        if lo > T::zero() {
            hi / lo
        } else {
            T::max_value().unwrap_or(hi)
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            vblock: self.rotation.matrix() * other.vblock + self.vblock * other.ablock,
            ablock: self.ablock * other.ablock,
        }
    }

    /// Product with an SE₂(3) element on the right, kept in SIM₂(3).
    pub fn compose_se23(&self, x: &SE23Element<T>) -> Self {
        Self {
            rotation: self.rotation * x.rotation,
            vblock: self.rotation.matrix() * x.vblock + self.vblock,
            ablock: self.ablock,
        }
    }

    /// (Rᵀ, −RᵀVA⁻¹, A⁻¹).
    pub fn inverse(&self) -> Result<Self, LieError> {
        let ainv = self.a_inverse()?;
        let rt = self.rotation.transpose();
        Ok(Self {
            rotation: rt,
            vblock: -(rt.matrix() * self.vblock * ainv),
            ablock: ainv,
        })
    }

    /// Drops the scaling block. Callers use this where A is I₂ up to round-off.
    pub fn to_se23(&self) -> SE23Element<T> {
        SE23Element::new(self.rotation, self.vblock)
    }

    pub fn exp(xi: &SIM23Tangent<T>) -> Self {
        exp_sim23(xi)
    }

    pub fn to_matrix(&self) -> Matrix5<T> {
        let mut m = Matrix5::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 2>(0, 3).copy_from(&self.vblock);
        m.fixed_view_mut::<2, 2>(3, 3).copy_from(&self.ablock);
        m
    }

    pub fn from_matrix(m: &Matrix5<T>) -> Result<Self, LieError> {
        let deviation = m.fixed_view::<2, 3>(3, 0).norm().as_f64();
        if deviation > 1e-12 || !deviation.is_finite() {
            return Err(LieError::NotElement { deviation });
        }
        Self::new(
            Rot3::from_matrix(m.fixed_view::<3, 3>(0, 0).into_owned())?,
            m.fixed_view::<3, 2>(0, 3).into_owned(),
            m.fixed_view::<2, 2>(3, 3).into_owned(),
        )
    }

    pub fn renormalized(self) -> Self {
        Self {
            rotation: self.rotation.renormalized(T::lit(super::ORTHONORMALITY_TOL)),
            ..self
        }
    }
}

impl<T: Real> From<SE23Element<T>> for SIM23Element<T> {
    fn from(x: SE23Element<T>) -> Self {
        Self {
            rotation: x.rotation,
            vblock: x.vblock,
            ablock: Matrix2::identity(),
        }
    }
}

impl<T: Real> Mul for SIM23Element<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.compose(&rhs)
    }
}

impl<T: Real> SIM23Tangent<T> {
    pub fn new(omega: Vec3<T>, wblock: Matrix3x2<T>, sblock: Matrix2<T>) -> Self {
        Self { omega, wblock, sblock }
    }

    pub fn zero() -> Self {
        Self::new(Vec3::zeros(), Matrix3x2::zeros(), Matrix2::zeros())
    }

    /// Rotational part only: (Ω, 0, 0).
    pub fn rotational(&self) -> Self {
        Self::new(self.omega, Matrix3x2::zeros(), Matrix2::zeros())
    }

    /// Translation and scaling part only: (0, W, S).
    pub fn affine(&self) -> Self {
        Self::new(Vec3::zeros(), self.wblock, self.sblock)
    }

    pub fn to_matrix(&self) -> Matrix5<T> {
        let mut m = Matrix5::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&self.omega));
        m.fixed_view_mut::<3, 2>(0, 3).copy_from(&self.wblock);
        m.fixed_view_mut::<2, 2>(3, 3).copy_from(&self.sblock);
        m
    }

    pub fn from_matrix(m: &Matrix5<T>) -> Result<Self, LieError> {
        let deviation = m.fixed_view::<2, 3>(3, 0).norm().as_f64();
        if deviation > 1e-12 || !deviation.is_finite() {
            return Err(LieError::NotElement { deviation });
        }
        let rot: Matrix3<T> = m.fixed_view::<3, 3>(0, 0).into_owned();
        Ok(Self::new(
            unskew(&rot)?,
            m.fixed_view::<3, 2>(0, 3).into_owned(),
            m.fixed_view::<2, 2>(3, 3).into_owned(),
        ))
    }

    pub fn norm(&self) -> T {
        (self.omega.norm_squared() + self.wblock.norm_squared() + self.sblock.norm_squared()).sqrt()
    }

    pub fn exp(&self) -> SIM23Element<T> {
        exp_sim23(self)
    }
}

impl<T: Real> From<SE23Tangent<T>> for SIM23Tangent<T> {
    fn from(xi: SE23Tangent<T>) -> Self {
        Self::new(xi.omega, xi.wblock, Matrix2::zeros())
    }
}

impl<T: Real> Add for SIM23Tangent<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.omega + rhs.omega, self.wblock + rhs.wblock, self.sblock + rhs.sblock)
    }
}

impl<T: Real> Sub for SIM23Tangent<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.omega - rhs.omega, self.wblock - rhs.wblock, self.sblock - rhs.sblock)
    }
}

impl<T: Real> Neg for SIM23Tangent<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.omega, -self.wblock, -self.sblock)
    }
}

impl<T: Real> Mul<T> for SIM23Tangent<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.omega * s, self.wblock * s, self.sblock * s)
    }
}

/// Exponential of sim₂(3) through the dense 5×5 scaling-and-squaring routine.
pub fn exp_sim23<T: Real>(xi: &SIM23Tangent<T>) -> SIM23Element<T> {
    let e = expm5(&xi.to_matrix());
    SIM23Element {
        rotation: Rot3::from_matrix_unchecked(e.fixed_view::<3, 3>(0, 0).into_owned()),
        vblock: e.fixed_view::<3, 2>(0, 3).into_owned(),
        ablock: e.fixed_view::<2, 2>(3, 3).into_owned(),
    }
}

/// Z·X·Z⁻¹ evaluated blockwise; the scaling block of the result is I₂ exactly.
pub fn conjugate<T: Real>(z: &SIM23Element<T>, x: &SE23Element<T>) -> Result<SE23Element<T>, LieError> {
    let ainv = z.a_inverse()?;
    let rz = z.rotation.matrix();
    let rc = z.rotation * x.rotation * z.rotation.transpose();
    let vblock = (Matrix3::identity() - rc.matrix()) * z.vblock * ainv + rz * x.vblock * ainv;
    Ok(SE23Element::new(rc, vblock))
}

/// Z·Δ·Z⁻¹ read back as an se₂(3) element.
pub fn adjoint<T: Real>(z: &SIM23Element<T>, delta: &SE23Tangent<T>) -> Result<SE23Tangent<T>, LieError> {
    let ainv = z.a_inverse()?;
    let rz = z.rotation.matrix();
    let omega = rz * delta.omega;
    let wblock = rz * delta.wblock * ainv - skew(&omega) * z.vblock * ainv;
    Ok(SE23Tangent::new(omega, wblock))
}
