//! Discrete observer update and error extraction.

use nalgebra::Matrix3;

use super::{CorrectionPair, ObserverError, ObserverState};
use crate::lie::{conjugate, exp_sim23, Rot3, SE23Element, SIM23Tangent};
use crate::model::{FlowFactors, ImuInput, WorldConstants};
use crate::Real;

/// One geometric Euler step of the observer with corrections held fixed.
///
/// With L = exp(dt(G+D)) and R = exp(dt(U−D)) the exact plant factors,
///
/// ```text
/// X̂⁺ = L · N · X̂ · R,   N = Z exp(−dtΓ) exp(dt·rot(Δ+Γ)) exp(dt·aff(Δ+Γ)) Z⁻¹
/// Z⁺ = L · Z · exp(−dtΓ)
/// ```
///
/// where rot keeps the Ω part of a tangent and aff the (W, S) part.
/// N = I + dt·Ad_Z(Δ) + O(dt²), so the step is consistent with the
/// continuous observer. The error then updates as
/// Ē⁺ = exp(dtΓ) Ē exp(−dt·aff) exp(−dt·rot): it never sees the inputs, and
/// its V_Ē block changes linearly, which keeps the discrete cost decreasing
/// at large steps.
pub fn observer_step<T: Real>(
    state: &ObserverState<T>,
    u: &ImuInput<T>,
    c: &CorrectionPair<T>,
    w: &WorldConstants<T>,
    dt: T,
) -> Result<ObserverState<T>, ObserverError> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(ObserverError::InvalidStep(dt.as_f64()));
    }
    let flow = FlowFactors::new(u, w, dt);
    let z = state.auxiliary;
    let z_inv = z.inverse()?;
    let back = exp_sim23(&(-c.gamma * dt));
    let total = SIM23Tangent::from(c.delta) + c.gamma;
    let n = z * back * exp_sim23(&(total.rotational() * dt)) * exp_sim23(&(total.affine() * dt)) * z_inv;
    let estimate = flow.apply(&n.compose_se23(&state.estimate));
    let auxiliary = (flow.left * z * back).renormalized();
    let next = ObserverState::new(estimate, auxiliary);
    if next.conditioning_alarm() {
        log::warn!("A_Z condition number {:.3e} exceeds alarm threshold", next.conditioning().as_f64());
    }
    Ok(next)
}

/// Ē = Z⁻¹XX̂⁻¹Z from its block closed form:
/// R_Ē = R_ZᵀRR̂ᵀR_Z, V_Ē = R_Zᵀ(VA_Z − V_Z) − R_ĒR_Zᵀ(V̂A_Z − V_Z).
pub fn error_state<T: Real>(x: &SE23Element<T>, state: &ObserverState<T>) -> Result<SE23Element<T>, ObserverError> {
    let z = &state.auxiliary;
    z.a_inverse()?;
    let rzt = z.rotation.transpose();
    let xhat = &state.estimate;
    let r = rzt * x.rotation * xhat.rotation.transpose() * z.rotation;
    let rzt_m: Matrix3<T> = rzt.into_matrix();
    let v = rzt_m * (x.vblock * z.ablock - z.vblock) - r.matrix() * rzt_m * (xhat.vblock * z.ablock - z.vblock);
    Ok(SE23Element::new(Rot3::from_matrix_unchecked(*r.matrix()), v))
}

/// Ē evaluated through the group operations, for cross-checking.
pub fn error_state_dense<T: Real>(x: &SE23Element<T>, state: &ObserverState<T>) -> Result<SE23Element<T>, ObserverError> {
    let z_inv = state.auxiliary.inverse()?;
    Ok(conjugate(&z_inv, &x.compose(&state.estimate.inverse()))?)
}
