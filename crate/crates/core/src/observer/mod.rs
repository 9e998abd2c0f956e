//! The synchronous observer.
//!
//! The estimate X̂ ∈ SE₂(3) and auxiliary state Z ∈ SIM₂(3) evolve as
//!
//! ```text
//! X̂' = X̂U + GX̂ + DX̂ − X̂D + Ad_Z(Δ)X̂
//! Z'  = (G + D)Z − ZΓ
//! ```
//!
//! so that the error Ē = Z⁻¹XX̂⁻¹Z obeys Ē' = ΓĒ − ĒΓ − ĒΔ whatever the inputs.
//! The corrections (Δ, Γ) are sums of independent sensor terms, each of which
//! decreases 𝓛(Ē) = tr(I − R_Ē) + |V_Ē|².

mod corrections;
mod lyapunov;
mod step;

use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};

use crate::lie::{LieError, SE23Element, SE23Tangent, SIM23Element, SIM23Tangent};
use crate::Real;

pub use corrections::{
    combine, correction_magnetometer, correction_pos_attitude, correction_pos_translation, correction_velocity,
    full_correction,
};
pub use lyapunov::{
    lyapunov, lyapunov_rate, rate_bound_pos_attitude, rate_bound_velocity, rate_magnetometer, rate_pos_attitude,
    rate_pos_translation, rotation_error_rate_identity,
};
pub use step::{error_state, error_state_dense, observer_step};

/// Condition number of A_Z above which a warning is raised.
pub const CONDITION_ALARM: f64 = 1e6;

/// Failures of observer operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObserverError {
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("invalid gains: {0}")]
    InvalidGains(String),
    #[error("time step must be positive and finite (got {0})")]
    InvalidStep(f64),
    #[error("unknown preset '{0}' (expected p, pv, pm or pvm)")]
    UnknownPreset(String),
}

/// Gain presets of the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// GNSS position only.
    P,
    /// GNSS position and velocity.
    Pv,
    /// GNSS position and magnetometer.
    Pm,
    /// All three sensors.
    Pvm,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Pvm, Preset::Pv, Preset::Pm, Preset::P];

    pub fn name(self) -> &'static str {
        match self {
            Preset::P => "p",
            Preset::Pv => "pv",
            Preset::Pm => "pm",
            Preset::Pvm => "pvm",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ObserverError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p" => Ok(Preset::P),
            "pv" => Ok(Preset::Pv),
            "pm" => Ok(Preset::Pm),
            "pvm" => Ok(Preset::Pvm),
            _ => Err(ObserverError::UnknownPreset(s.to_string())),
        }
    }
}

/// Observer gains.
///
/// `k_p`, `k_q` act on position and the A_Z flow; `k_c` and `k_d` feed the
/// position and velocity innovations into attitude; `k_v` is the velocity
/// gain and `k_m` the magnetometer gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains<T: Real> {
    pub k_p: T,
    pub k_c: T,
    pub k_v: T,
    pub k_d: T,
    pub k_m: T,
    pub k_q: Matrix2<T>,
}

impl<T: Real> Gains<T> {
    /// Validated constructor.
    pub fn new(k_p: T, k_c: T, k_v: T, k_d: T, k_m: T, k_q: Matrix2<T>) -> Result<Self, ObserverError> {
        let g = Self { k_p, k_c, k_v, k_d, k_m, k_q };
        g.validate()?;
        Ok(g)
    }

    /// k_p, k_c > 0; k_v, k_d, k_m ≥ 0; K_q symmetric positive definite.
    pub fn validate(&self) -> Result<(), ObserverError> {
        let bad = |m: &str| Err(ObserverError::InvalidGains(m.to_string()));
        let scalars = [self.k_p, self.k_c, self.k_v, self.k_d, self.k_m];
        if scalars.iter().chain(self.k_q.iter()).any(|x| !x.is_finite()) {
            return bad("gains must be finite");
        }
        if !(self.k_p > T::zero() && self.k_c > T::zero()) {
            return bad("k_p and k_c must be positive");
        }
        if self.k_v < T::zero() || self.k_d < T::zero() || self.k_m < T::zero() {
            return bad("k_v, k_d and k_m must be nonnegative");
        }
        let k = &self.k_q;
        if (k[(0, 1)] - k[(1, 0)]).abs() > T::lit(1e-12) * k.norm() {
            return bad("K_q must be symmetric");
        }
        if !(k[(0, 0)] > T::zero() && k.determinant() > T::zero()) {
            return bad("K_q must be positive definite");
        }
        Ok(())
    }

    /// Gains of a simulation preset: K_q = diag(10, 2), k_p = 10, k_c = 0.1,
    /// plus velocity (k_v = 10, k_d = 0.1) and magnetometer (k_m = 2) terms
    /// where the preset uses them.
    pub fn preset(p: Preset) -> Self {
        let (vel, mag) = match p {
            Preset::P => (false, false),
            Preset::Pv => (true, false),
            Preset::Pm => (false, true),
            Preset::Pvm => (true, true),
        };
        let on = |b: bool, x: f64| if b { T::lit(x) } else { T::zero() };
        Self {
            k_p: T::lit(10.0),
            k_c: T::lit(0.1),
            k_v: on(vel, 10.0),
            k_d: on(vel, 0.1),
            k_m: on(mag, 2.0),
            k_q: Matrix2::new(T::lit(10.0), T::zero(), T::zero(), T::lit(2.0)),
        }
    }

    /// Gains used for flight-log replay.
    pub fn experiment() -> Self {
        Self {
            k_p: T::lit(1.0),
            k_c: T::lit(0.01),
            k_v: T::lit(1.0),
            k_d: T::lit(0.001),
            k_m: T::lit(2e-6),
            k_q: Matrix2::new(T::lit(0.1), T::zero(), T::zero(), T::lit(0.02)),
        }
    }

    /// Whether velocity measurements influence the observer.
    pub fn uses_velocity(&self) -> bool {
        self.k_v > T::zero() || self.k_d > T::zero()
    }

    pub fn uses_magnetometer(&self) -> bool {
        self.k_m > T::zero()
    }
}

/// Output selectors: V·C_p = p and V·C_v = v.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selectors<T: Real> {
    pub c_p: Vector2<T>,
    pub c_v: Vector2<T>,
}

impl<T: Real> Selectors<T> {
    pub fn new() -> Self {
        Self {
            c_p: Vector2::new(T::zero(), T::one()),
            c_v: Vector2::new(T::one(), T::zero()),
        }
    }
}

impl<T: Real> Default for Selectors<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Estimate X̂ and auxiliary state Z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverState<T: Real> {
    pub estimate: SE23Element<T>,
    pub auxiliary: SIM23Element<T>,
}

impl<T: Real> ObserverState<T> {
    pub fn new(estimate: SE23Element<T>, auxiliary: SIM23Element<T>) -> Self {
        Self { estimate, auxiliary }
    }

    pub fn identity() -> Self {
        Self::new(SE23Element::identity(), SIM23Element::identity())
    }

    /// Condition number of A_Z.
    pub fn conditioning(&self) -> T {
        self.auxiliary.condition_number()
    }

    /// True when A_Z is conditioned worse than [`CONDITION_ALARM`].
    pub fn conditioning_alarm(&self) -> bool {
        !(self.conditioning().as_f64() <= CONDITION_ALARM)
    }
}

/// Correction terms (Δ, Γ), held constant over one integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionPair<T: Real> {
    pub delta: SE23Tangent<T>,
    pub gamma: SIM23Tangent<T>,
}

impl<T: Real> CorrectionPair<T> {
    pub fn new(delta: SE23Tangent<T>, gamma: SIM23Tangent<T>) -> Self {
        Self { delta, gamma }
    }

    pub fn zero() -> Self {
        Self::new(SE23Tangent::zero(), SIM23Tangent::zero())
    }

    pub fn is_finite(&self) -> bool {
        let d = &self.delta;
        let g = &self.gamma;
        d.omega.iter().chain(d.wblock.iter()).chain(g.omega.iter()).chain(g.wblock.iter()).chain(g.sblock.iter()).all(|x| x.is_finite())
    }
}

impl<T: Real> Add for CorrectionPair<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.delta + rhs.delta, self.gamma + rhs.gamma)
    }
}

impl<T: Real> Mul<T> for CorrectionPair<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.delta * s, self.gamma * s)
    }
}
