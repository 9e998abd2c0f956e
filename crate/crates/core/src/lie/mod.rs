//! Matrix Lie groups used by the observer: SO(3), SE₂(3) and SIM₂(3).
//!
//! Elements are stored blockwise. Every type can be embedded as a dense 5×5
//! (or 3×3) matrix through `to_matrix`, which the tests use as an oracle.

mod dense;
mod se23;
mod sim23;
mod so3;

pub use dense::expm5;
pub use se23::{exp_se23, SE23Element, SE23Tangent};
pub use sim23::{adjoint, conjugate, exp_sim23, SIM23Element, SIM23Tangent};
pub use so3::{exp_so3, left_jacobian, Rot3};

use nalgebra::{Matrix3, Vector3};

use crate::Real;

/// Three-component real vector.
pub type Vec3<T> = Vector3<T>;

/// Orthonormality tolerance for rotations; drift past it triggers projection.
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

/// Smallest admissible |det(A)| for the SIM₂(3) scaling block.
pub const DETERMINANT_FLOOR: f64 = 1e-12;

const UNSKEW_TOL: f64 = 1e-6;

/// Failures of group operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LieError {
    #[error("scaling block is near-singular (|det| = {det:e})")]
    SingularScaling { det: f64 },
    #[error("matrix is not antisymmetric (symmetric part norm {asymmetry:e})")]
    NotSkew { asymmetry: f64 },
    #[error("matrix is not a rotation (orthonormality error {error:e}, det {det})")]
    NotRotation { error: f64, det: f64 },
    #[error("matrix is not a group element (bottom rows deviate by {deviation:e})")]
    NotElement { deviation: f64 },
}

/// Cross-product matrix: `skew(v) * w == v.cross(&w)`.
pub fn skew<T: Real>(v: &Vec3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v.z, v.y, v.z, z, -v.x, -v.y, v.x, z)
}

/// Inverse of [`skew`]. Rejects matrices whose symmetric part exceeds 1e-6.
pub fn unskew<T: Real>(m: &Matrix3<T>) -> Result<Vec3<T>, LieError> {
    let half = T::lit(0.5);
    let asymmetry = ((m + m.transpose()) * half).norm();
    if asymmetry.as_f64() > UNSKEW_TOL || !asymmetry.is_finite() {
        return Err(LieError::NotSkew {
            asymmetry: asymmetry.as_f64(),
        });
    }
    Ok(Vec3::new(
        (m[(2, 1)] - m[(1, 2)]) * half,
        (m[(0, 2)] - m[(2, 0)]) * half,
        (m[(1, 0)] - m[(0, 1)]) * half,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn skew_axis_case() {
        let s = skew(&Vec3::<f64>::z());
        assert_eq!(s * Vec3::x(), Vec3::y());
        assert_eq!(skew(&Vec3::<f64>::zeros()), Matrix3::zeros());
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(skew(&v).transpose(), -skew(&v));
    }

    #[test]
    fn unskew_round_trip_and_rejects_symmetric() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(unskew(&skew(&v)).unwrap(), v);
        assert_eq!(unskew(&Matrix3::<f64>::zeros()).unwrap(), Vec3::zeros());
        assert!(matches!(
            unskew(&Matrix3::<f64>::identity()),
            Err(LieError::NotSkew { .. })
        ));
    }

    proptest! {
        #[test]
        fn skew_is_cross_product(a in prop::array::uniform3(-10.0f64..10.0),
                                 b in prop::array::uniform3(-10.0f64..10.0)) {
            let (a, b) = (Vec3::from(a), Vec3::from(b));
            prop_assert!((skew(&a) * b - a.cross(&b)).norm() < 1e-12);
        }
    }
}
