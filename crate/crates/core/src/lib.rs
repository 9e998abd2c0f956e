//! Synchronous observer for GNSS-aided inertial navigation.
//!
//! The navigation state lives on SE₂(3). The observer keeps an estimate on
//! SE₂(3) and an auxiliary state on SIM₂(3), and is built so that the error
//! between them has input-independent dynamics.

pub mod analysis;
pub mod ingest;
pub mod lie;
pub mod model;
pub mod observer;
pub mod random;
pub mod sim;
mod scalar;

pub use scalar::Real;

/// Double-precision rotation.
pub type Rot3 = lie::Rot3<f64>;
/// Single-precision rotation.
pub type Rot3f32 = lie::Rot3<f32>;
/// Double-precision navigation group element.
pub type SE23 = lie::SE23Element<f64>;
/// Single-precision navigation group element.
pub type SE23f32 = lie::SE23Element<f32>;
pub type SE23Tangent = lie::SE23Tangent<f64>;
pub type SE23Tangentf32 = lie::SE23Tangent<f32>;
/// Double-precision auxiliary group element.
pub type SIM23 = lie::SIM23Element<f64>;
/// Single-precision auxiliary group element.
pub type SIM23f32 = lie::SIM23Element<f32>;
pub type SIM23Tangent = lie::SIM23Tangent<f64>;
pub type SIM23Tangentf32 = lie::SIM23Tangent<f32>;
pub type ObserverState = observer::ObserverState<f64>;
pub type ObserverStatef32 = observer::ObserverState<f32>;
pub type Gains = observer::Gains<f64>;
pub type Gainsf32 = observer::Gains<f32>;
