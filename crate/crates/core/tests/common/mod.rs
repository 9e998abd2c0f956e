//! Shared helpers for the integration tests. Everything here is computed
//! from dense 5×5 matrices or plain calculus, never from the library's own
//! block formulas.

#![allow(dead_code)]

use insync::lie::{SE23Element, SE23Tangent, SIM23Element, SIM23Tangent};
use insync::observer::{CorrectionPair, ObserverState};
use insync::random;
use nalgebra::{Matrix2, Matrix3, Matrix3x2, Matrix5};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dense_inverse(m: &Matrix5<f64>) -> Matrix5<f64> {
    m.try_inverse().expect("invertible")
}

/// Cost evaluated straight from an embedded 5×5 error matrix.
pub fn dense_lyapunov(e: &Matrix5<f64>) -> f64 {
    let r: Matrix3<f64> = e.fixed_view::<3, 3>(0, 0).into_owned();
    let v: Matrix3x2<f64> = e.fixed_view::<3, 2>(0, 3).into_owned();
    3.0 - r.trace() + v.norm_squared()
}

/// Ē(h) = exp(hΓ)·Ē·exp(−h(Γ + Δ)) with Padé exponentials. It solves
/// Ē' = ΓĒ − ĒΓ − ĒΔ for frozen corrections.
pub fn error_flow(e: &Matrix5<f64>, c: &CorrectionPair<f64>, h: f64) -> Matrix5<f64> {
    let gamma = c.gamma.to_matrix();
    let total = gamma + c.delta.to_matrix();
    (gamma * h).exp() * e * (-total * h).exp()
}

/// Central difference of the cost along [`error_flow`].
pub fn fd_lyapunov_rate(e: &Matrix5<f64>, c: &CorrectionPair<f64>, h: f64) -> f64 {
    (dense_lyapunov(&error_flow(e, c, h)) - dense_lyapunov(&error_flow(e, c, -h))) / (2.0 * h)
}

/// Ē = Z⁻¹·X·X̂⁻¹·Z from dense products.
pub fn dense_error(x: &SE23Element<f64>, state: &ObserverState<f64>) -> Matrix5<f64> {
    let z = state.auxiliary.to_matrix();
    dense_inverse(&z) * x.to_matrix() * dense_inverse(&state.estimate.to_matrix()) * z
}

/// Random observer state and truth at moderate scales.
pub fn random_setup(seed: u64) -> (SE23Element<f64>, ObserverState<f64>) {
    let mut r = rng(seed);
    let truth = random::se23(&mut r, 3.0);
    let estimate = random::se23(&mut r, 3.0);
    let z: SIM23Element<f64> = random::sim23(&mut r, 3.0, 0.7);
    (truth, ObserverState::new(estimate, z))
}

pub fn random_tangent(seed: u64, max_norm: f64) -> SE23Tangent<f64> {
    random::se23_tangent(&mut rng(seed), max_norm)
}

pub fn random_sim_tangent(seed: u64, max_norm: f64) -> SIM23Tangent<f64> {
    random::sim23_tangent(&mut rng(seed), max_norm)
}

pub fn shift() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 0.0, 0.0)
}

/// Newton iteration on the three free entries of a symmetric P for
/// S_DP + PS_Dᵀ + diag(k_v, k_p) − PK_qP = 0, with a finite-difference
/// Jacobian. Starts from a large multiple of the identity so it lands on
/// the stabilizing (positive definite) root.
pub fn solve_are(k_p: f64, k_v: f64, k_q: &Matrix2<f64>) -> Matrix2<f64> {
    let residual = |x: [f64; 3]| {
        let p = Matrix2::new(x[0], x[1], x[1], x[2]);
        let s = shift();
        let r = s * p + p * s.transpose() + Matrix2::new(k_v, 0.0, 0.0, k_p) - p * k_q * p;
        [r[(0, 0)], r[(0, 1)], r[(1, 1)]]
    };
    let mut x = [10.0, 0.0, 10.0];
    for _ in 0..100 {
        let f = residual(x);
        let mut jac = nalgebra::Matrix3::zeros();
        for j in 0..3 {
            let h = 1e-7 * x[j].abs().max(1.0);
            let mut xp = x;
            xp[j] += h;
            let mut xm = x;
            xm[j] -= h;
            let (fp, fm) = (residual(xp), residual(xm));
            for i in 0..3 {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let step = jac.lu().solve(&nalgebra::Vector3::from(f)).expect("nonsingular Jacobian");
        for i in 0..3 {
            x[i] -= step[i];
        }
        if step.norm() < 1e-15 * (1.0 + x[0].abs() + x[2].abs()) {
            break;
        }
    }
    Matrix2::new(x[0], x[1], x[1], x[2])
}
