//! Sensor correction terms and their gated combination.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector2};

use super::{CorrectionPair, Gains, ObserverError, ObserverState, Selectors};
use crate::lie::{SE23Tangent, SIM23Tangent, Vec3};
use crate::model::{MeasurementBundle, WorldConstants};
use crate::Real;

const UNIT_TOL: f64 = 1e-9;

/// Quantities shared by the GNSS terms for one output selector C.
struct Channel<T: Real> {
    /// A_Z⁻¹C as a column; its transpose is the row C ᵀA_Z⁻ᵀ.
    a: Vector2<T>,
    /// R_Zᵀ(y − V_ZA_Z⁻¹C).
    mu: Vec3<T>,
    /// R_Zᵀ(ŷ − V_ZA_Z⁻¹C).
    mu_hat: Vec3<T>,
    /// R_Zᵀ(y − ŷ).
    innovation: Vec3<T>,
}

impl<T: Real> Channel<T> {
    fn new(state: &ObserverState<T>, c: Vector2<T>, y: &Vec3<T>, yhat: &Vec3<T>) -> Result<Self, ObserverError> {
        let z = &state.auxiliary;
        let a = z.a_inverse()? * c;
        let b = z.vblock * a;
        let rzt: Matrix3<T> = z.rotation.transpose().into_matrix();
        Ok(Self {
            a,
            mu: rzt * (y - b),
            mu_hat: rzt * (yhat - b),
            innovation: rzt * (y - yhat),
        })
    }

    fn outer(&self, v: &Vec3<T>) -> Matrix3x2<T> {
        v * self.a.transpose()
    }
}

/// Position term acting on velocity and position errors only.
///
/// W_Δ = k_p R_Zᵀ(y − ŷ)C_pᵀA_Z⁻ᵀ, W_Γ = −k_p R_Zᵀ(y − V_ZA_Z⁻¹C_p)C_pᵀA_Z⁻ᵀ,
/// S_Γ = ½A_ZᵀK_qA_Z − (k_p/2)A_Z⁻¹C_pC_pᵀA_Z⁻ᵀ.
pub fn correction_pos_translation<T: Real>(
    state: &ObserverState<T>,
    y_p: &Vec3<T>,
    gains: &Gains<T>,
) -> Result<CorrectionPair<T>, ObserverError> {
    let ch = Channel::new(state, Selectors::new().c_p, y_p, &state.estimate.position())?;
    let k = gains.k_p;
    let half = T::lit(0.5);
    let az = &state.auxiliary.ablock;
    let s_gamma = az.transpose() * gains.k_q * az * half - ch.a * ch.a.transpose() * (k * half);
    Ok(CorrectionPair::new(
        SE23Tangent::new(Vec3::zeros(), ch.outer(&ch.innovation) * k),
        SIM23Tangent::new(Vec3::zeros(), -ch.outer(&ch.mu) * k, s_gamma),
    ))
}

/// Position term that also corrects attitude.
///
/// Ω_Δ = 4k_c R_Zᵀ((ŷ − b) × (y − b)) with b = V_ZA_Z⁻¹C_p; the translation
/// parts mirror [`correction_pos_translation`] with gain k_c and no S_Γ.
pub fn correction_pos_attitude<T: Real>(
    state: &ObserverState<T>,
    y_p: &Vec3<T>,
    gains: &Gains<T>,
) -> Result<CorrectionPair<T>, ObserverError> {
    let ch = Channel::new(state, Selectors::new().c_p, y_p, &state.estimate.position())?;
    Ok(attitude_pair(&ch, gains.k_c, gains.k_c, T::zero()))
}

/// GNSS velocity term: k_v acts on translation, k_d on attitude.
pub fn correction_velocity<T: Real>(
    state: &ObserverState<T>,
    y_v: &Vec3<T>,
    gains: &Gains<T>,
) -> Result<CorrectionPair<T>, ObserverError> {
    let ch = Channel::new(state, Selectors::new().c_v, y_v, &state.estimate.velocity())?;
    Ok(attitude_pair(&ch, gains.k_d, gains.k_v + gains.k_d, gains.k_v))
}

fn attitude_pair<T: Real>(ch: &Channel<T>, k_att: T, k_trans: T, k_scale: T) -> CorrectionPair<T> {
    // R_Zᵀ(a × b) = (R_Zᵀa) × (R_Zᵀb).
    let omega = ch.mu_hat.cross(&ch.mu) * (T::lit(4.0) * k_att);
    let s_gamma: Matrix2<T> = -(ch.a * ch.a.transpose()) * (k_scale * T::lit(0.5));
    CorrectionPair::new(
        SE23Tangent::new(omega, ch.outer(&ch.innovation) * k_trans),
        SIM23Tangent::new(Vec3::zeros(), -ch.outer(&ch.mu) * k_trans, s_gamma),
    )
}

/// Magnetometer term: Ω_Δ = 4k_m R_Zᵀ(R̂y_m) × ẙ_m, everything else zero.
///
/// Inputs that are not unit vectors are normalized with a warning.
pub fn correction_magnetometer<T: Real>(
    state: &ObserverState<T>,
    y_m: &Vec3<T>,
    mag_ref: &Vec3<T>,
    k_m: T,
) -> CorrectionPair<T> {
    let unit = |v: &Vec3<T>, what: &str| {
        let n = v.norm();
        if (n.as_f64() - 1.0).abs() > UNIT_TOL {
            log::warn!("{what} has norm {:.6}; normalizing", n.as_f64());
            v / n
        } else {
            *v
        }
    };
    let y = unit(y_m, "magnetometer measurement");
    let r = unit(mag_ref, "magnetic reference");
    let rzt = state.auxiliary.rotation.transpose().into_matrix();
    let omega = rzt * (state.estimate.rotation * y).cross(&r) * (T::lit(4.0) * k_m);
    CorrectionPair::new(SE23Tangent::new(omega, Matrix3x2::zeros()), SIM23Tangent::zero())
}

/// Weighted sum Σ αᵢ(Δᵢ, Γᵢ). Absent sensors enter with weight 0.
pub fn combine<T: Real>(corrections: &[(CorrectionPair<T>, T)]) -> CorrectionPair<T> {
    corrections
        .iter()
        .fold(CorrectionPair::zero(), |acc, (c, alpha)| acc + *c * *alpha)
}

/// Sum of all sensor terms available in `m`, each with weight 1.
///
/// Position drives both position terms, velocity drives the velocity term
/// when its gains are nonzero, and the magnetometer term uses the unit
/// reference direction of `world`.
pub fn full_correction<T: Real>(
    state: &ObserverState<T>,
    m: &MeasurementBundle<T>,
    gains: &Gains<T>,
    world: &WorldConstants<T>,
) -> Result<CorrectionPair<T>, ObserverError> {
    let mut terms = Vec::with_capacity(4);
    let gate = |present: bool| if present { T::one() } else { T::zero() };
    if let Some(y) = &m.pos {
        terms.push((correction_pos_translation(state, y, gains)?, T::one()));
        terms.push((correction_pos_attitude(state, y, gains)?, T::one()));
    }
    if let Some(y) = &m.vel {
        terms.push((correction_velocity(state, y, gains)?, gate(gains.uses_velocity())));
    }
    if let Some(y) = &m.mag {
        let r = world.mag_direction();
        terms.push((correction_magnetometer(state, y, &r, gains.k_m), gate(gains.uses_magnetometer())));
    }
    Ok(combine(&terms))
}
