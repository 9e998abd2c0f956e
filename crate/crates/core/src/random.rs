//! Random group elements and tangents for property checks.

use nalgebra::{Matrix2, Matrix3x2};
use rand::Rng;

use crate::lie::{exp_so3, Rot3, SE23Element, SE23Tangent, SIM23Element, SIM23Tangent, Vec3};
use crate::Real;

/// Components drawn uniformly from [−scale, scale].
pub fn vec3<T: Real, R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Vec3<T> {
    Vec3::from_fn(|_, _| T::lit(rng.gen_range(-scale..=scale)))
}

/// Rotation of angle up to π about a random axis.
pub fn rotation<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Rot3<T> {
    let axis: Vec3<f64> = vec3(rng, 1.0);
    let axis = axis.try_normalize(1e-9).unwrap_or(Vec3::x());
    let angle = rng.gen_range(0.0..std::f64::consts::PI);
    exp_so3(&(axis * angle).map(T::lit))
}

/// Random extended pose with translation entries in [−scale, scale].
pub fn se23<T: Real, R: Rng + ?Sized>(rng: &mut R, scale: f64) -> SE23Element<T> {
    SE23Element::new(rotation(rng), Matrix3x2::from_fn(|_, _| T::lit(rng.gen_range(-scale..=scale))))
}

/// Random SIM₂(3) element with A = exp(S), ‖S‖ bounded by `log_spread`, so
/// cond(A) ≤ exp(2·log_spread).
pub fn sim23<T: Real, R: Rng + ?Sized>(rng: &mut R, scale: f64, log_spread: f64) -> SIM23Element<T> {
    let s: Matrix2<f64> = Matrix2::from_fn(|_, _| rng.gen_range(-1.0..=1.0));
    let s = s * (log_spread / s.norm().max(1e-9));
    let xi = SIM23Tangent::new(Vec3::zeros(), Matrix3x2::zeros(), s.map(T::lit));
    SIM23Element {
        rotation: rotation(rng),
        vblock: Matrix3x2::from_fn(|_, _| T::lit(rng.gen_range(-scale..=scale))),
        ablock: xi.exp().ablock,
    }
}

/// Tangent with Euclidean norm drawn uniformly from [0, max_norm].
pub fn se23_tangent<T: Real, R: Rng + ?Sized>(rng: &mut R, max_norm: f64) -> SE23Tangent<T> {
    let raw: SE23Tangent<f64> = SE23Tangent::new(vec3(rng, 1.0), Matrix3x2::from_fn(|_, _| rng.gen_range(-1.0..=1.0)));
    let target = rng.gen_range(0.0..=max_norm);
    let scaled = raw * (target / raw.norm().max(1e-12));
    SE23Tangent::new(scaled.omega.map(T::lit), scaled.wblock.map(T::lit))
}

/// sim₂(3) tangent with Euclidean norm drawn uniformly from [0, max_norm].
pub fn sim23_tangent<T: Real, R: Rng + ?Sized>(rng: &mut R, max_norm: f64) -> SIM23Tangent<T> {
    let raw: SIM23Tangent<f64> = SIM23Tangent::new(
        vec3(rng, 1.0),
        Matrix3x2::from_fn(|_, _| rng.gen_range(-1.0..=1.0)),
        Matrix2::from_fn(|_, _| rng.gen_range(-1.0..=1.0)),
    );
    let target = rng.gen_range(0.0..=max_norm);
    let scaled = raw * (target / raw.norm().max(1e-12));
    SIM23Tangent::new(scaled.omega.map(T::lit), scaled.wblock.map(T::lit), scaled.sblock.map(T::lit))
}
