//! The cost 𝓛(Ē) = tr(I − R_Ē) + |V_Ē|² and its rates along the error flow.

use nalgebra::{Matrix3, Vector2};

use super::{CorrectionPair, Gains, Selectors};
use crate::lie::{skew, Rot3, SE23Element, SIM23Element, Vec3, LieError};
use crate::Real;

/// tr(I − R_Ē) + |V_Ē|²; lies in [0, 4 + |V_Ē|²] and vanishes only at Ē = I.
///
/// For a rotation tr(I − R) = ½‖R − I‖², which is evaluated instead because
/// it keeps full relative precision near the identity.
pub fn lyapunov<T: Real>(ebar: &SE23Element<T>) -> T {
    let rot = (ebar.rotation.matrix() - Matrix3::identity()).norm_squared() * T::lit(0.5);
    rot + ebar.vblock.norm_squared()
}

/// d𝓛/dt along Ē' = ΓĒ − ĒΓ − ĒΔ:
/// tr(R_ĒΩ_Δ^) − 2⟨V_ĒᵀV_Ē, S_Γ⟩ + 2⟨V_Ē, (I − R_Ē)W_Γ − R_ĒW_Δ⟩.
pub fn lyapunov_rate<T: Real>(ebar: &SE23Element<T>, c: &CorrectionPair<T>) -> T {
    let r = ebar.rotation.matrix();
    let v = &ebar.vblock;
    let two = T::lit(2.0);
    let rot = (r * skew(&c.delta.omega)).trace();
    let scale = (v.transpose() * v).component_mul(&c.gamma.sblock).sum();
    let trans = v
        .component_mul(&((Matrix3::identity() - r) * c.gamma.wblock - r * c.delta.wblock))
        .sum();
    rot - two * scale + two * trans
}

/// d/dt tr(I − R) under R' = −2kR(μ̂ × μ)^ with μ = Rμ̂ + δ:
/// −k|(I − R²)μ|² + 2k⟨(I − R²)μ, δ⟩.
///
/// μ̂ enters only through δ = μ − Rμ̂; it is taken to keep the hypothesis
/// explicit and is checked in debug builds.
pub fn rotation_error_rate_identity<T: Real>(r: &Rot3<T>, mu_hat: &Vec3<T>, mu: &Vec3<T>, delta: &Vec3<T>, k: T) -> T {
    debug_assert!(
        (*r * *mu_hat + delta - mu).norm().as_f64() <= 1e-9 * (1.0 + mu.norm().as_f64()),
        "μ must equal Rμ̂ + δ"
    );
    let r2 = r.matrix() * r.matrix();
    let q = (Matrix3::identity() - r2) * mu;
    -k * q.norm_squared() + T::lit(2.0) * k * q.dot(delta)
}

fn selected<T: Real>(z: &SIM23Element<T>, c: Vector2<T>) -> Result<(Vector2<T>, Vec3<T>), LieError> {
    let a = z.a_inverse()? * c;
    Ok((a, z.vblock * a))
}

fn mu<T: Real>(z: &SIM23Element<T>, y: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    z.rotation.transpose() * (y - b)
}

/// Exact rate of the position translation term:
/// −k_p|V_ĒA_Z⁻¹C_p|² − |A_ZV_Ēᵀ|²_{K_q}.
pub fn rate_pos_translation<T: Real>(ebar: &SE23Element<T>, z: &SIM23Element<T>, gains: &Gains<T>) -> Result<T, LieError> {
    let (a, _) = selected(z, Selectors::new().c_p)?;
    let m = z.ablock * ebar.vblock.transpose();
    let weighted = (m.transpose() * gains.k_q * m).trace();
    Ok(-gains.k_p * (ebar.vblock * a).norm_squared() - weighted)
}

/// Exact rate of the position attitude term:
/// −2k_c|(I − R_Ē²)μ − V_ĒA_Z⁻¹C_p|², with μ = R_Zᵀ(y − V_ZA_Z⁻¹C_p).
pub fn rate_pos_attitude<T: Real>(ebar: &SE23Element<T>, z: &SIM23Element<T>, y_p: &Vec3<T>, k_c: T) -> Result<T, LieError> {
    let (a, b) = selected(z, Selectors::new().c_p)?;
    let r = ebar.rotation.matrix();
    let q = (Matrix3::identity() - r * r) * mu(z, y_p, &b) - ebar.vblock * a;
    Ok(-T::lit(2.0) * k_c * q.norm_squared())
}

/// Upper bound for the position attitude term:
/// −2k_c(|(R_Ē² − I)μ| − |V_ĒA_Z⁻¹C_p|)².
pub fn rate_bound_pos_attitude<T: Real>(ebar: &SE23Element<T>, z: &SIM23Element<T>, y_p: &Vec3<T>, k_c: T) -> Result<T, LieError> {
    let (a, b) = selected(z, Selectors::new().c_p)?;
    let r = ebar.rotation.matrix();
    let gap = ((r * r - Matrix3::identity()) * mu(z, y_p, &b)).norm() - (ebar.vblock * a).norm();
    Ok(-T::lit(2.0) * k_c * gap * gap)
}

/// Upper bound for the velocity term:
/// −k_v|V_ĒA_Z⁻¹C_v|² − 2k_d(|(R_Ē² − I)μ_v| − |V_ĒA_Z⁻¹C_v|)².
pub fn rate_bound_velocity<T: Real>(ebar: &SE23Element<T>, z: &SIM23Element<T>, y_v: &Vec3<T>, gains: &Gains<T>) -> Result<T, LieError> {
    let (a, b) = selected(z, Selectors::new().c_v)?;
    let r = ebar.rotation.matrix();
    let va = (ebar.vblock * a).norm();
    let gap = ((r * r - Matrix3::identity()) * mu(z, y_v, &b)).norm() - va;
    Ok(-gains.k_v * va * va - T::lit(2.0) * gains.k_d * gap * gap)
}

/// Exact rate of the magnetometer term: −2k_m|(R_Ē² − I)R_Zᵀẙ_m|².
pub fn rate_magnetometer<T: Real>(ebar: &SE23Element<T>, z: &SIM23Element<T>, mag_ref: &Vec3<T>, k_m: T) -> T {
    let r = ebar.rotation.matrix();
    let q = (r * r - Matrix3::identity()) * (z.rotation.transpose() * mag_ref.normalize());
    -T::lit(2.0) * k_m * q.norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::exp_so3;
    use nalgebra::Matrix3x2;
    use std::f64::consts::PI;

    #[test]
    fn lyapunov_values() {
        assert_eq!(lyapunov(&SE23Element::<f64>::identity()), 0.0);
        let e = SE23Element::new(exp_so3(&(Vec3::x() * (0.99 * PI))), Matrix3x2::zeros());
        let expected = 2.0 - 2.0 * (0.99 * PI).cos();
        assert!((lyapunov(&e) - expected).abs() < 1e-12);
        assert!((lyapunov(&e) - 3.999013).abs() < 1e-5);
        let e = SE23Element::<f64>::from_parts(Rot3::identity(), Vec3::x(), Vec3::y());
        assert_eq!(lyapunov(&e), 2.0);
    }

    #[test]
    fn zero_correction_rate_is_zero() {
        let e = SE23Element::from_parts(exp_so3(&Vec3::new(1.0, 2.0, 0.5)), Vec3::x(), Vec3::z());
        assert_eq!(lyapunov_rate(&e, &CorrectionPair::zero()), 0.0);
    }

    #[test]
    fn rotation_identity_cases() {
        let z = Vec3::zeros();
        assert_eq!(rotation_error_rate_identity(&Rot3::<f64>::identity(), &Vec3::x(), &Vec3::x(), &z, 1.0), 0.0);
        let r = exp_so3(&(Vec3::z() * (PI / 2.0)));
        let mu_hat = r.transpose() * Vec3::x();
        let v = rotation_error_rate_identity(&r, &mu_hat, &Vec3::x(), &z, 1.0);
        assert!((v + 4.0).abs() < 1e-12);
    }
}
