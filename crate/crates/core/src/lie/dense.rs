//! Dense 5×5 matrix exponential.

use nalgebra::Matrix5;

use crate::Real;

const TAYLOR_TERMS: usize = 10;
const SCALED_NORM: f64 = 0.25;
const MAX_SQUARINGS: i32 = 64;

/// Scaling-and-squaring exponential with a fixed 10-term Taylor kernel.
///
/// The argument is halved until its induced 1-norm is at most 0.25, where the
/// truncated series is accurate to well below f64 round-off.
pub fn expm5<T: Real>(m: &Matrix5<T>) -> Matrix5<T> {
    let norm = m
        .column_iter()
        .map(|c| c.iter().fold(T::zero(), |acc, x| acc + x.abs()))
        .fold(T::zero(), |a, b| a.max(b));
    let mut squarings = 0;
    let mut scale = T::one();
    let limit = T::lit(SCALED_NORM);
    while norm * scale > limit && squarings < MAX_SQUARINGS {
        scale *= T::lit(0.5);
        squarings += 1;
    }
    let a = m * scale;
    let id = Matrix5::identity();
    // Horner form of Σ Aᵏ/k!.
    let mut r = id;
    for k in (1..=TAYLOR_TERMS).rev() {
        r = id + (a * r) / T::lit(k as f64);
    }
    for _ in 0..squarings {
        r = r * r;
    }
    r
}
