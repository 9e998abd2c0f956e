mod common;

use common::{dense_inverse, rng};
use insync::lie::{adjoint, conjugate, exp_se23, exp_sim23, exp_so3, SE23Element, SIM23Element};
use insync::random;
use nalgebra::{Matrix2, Matrix3, Matrix5};
use proptest::prelude::*;

#[test]
fn conjugation_closure_thousand_pairs() {
    let mut r = rng(11);
    let mut worst_block = 0.0f64;
    let mut worst_match = 0.0f64;
    for _ in 0..1000 {
        let z: SIM23Element<f64> = random::sim23(&mut r, 10.0, 1.0);
        let x: SE23Element<f64> = random::se23(&mut r, 10.0);
        let zm = z.to_matrix();
        let dense = zm * x.to_matrix() * dense_inverse(&zm);
        let a: Matrix2<f64> = dense.fixed_view::<2, 2>(3, 3).into_owned();
        worst_block = worst_block.max((a - Matrix2::identity()).abs().max());
        let closed = conjugate(&z, &x).unwrap().to_matrix();
        worst_match = worst_match.max((closed - dense).view((0, 0), (3, 5)).abs().max());
    }
    assert!(worst_block < 1e-12, "A block deviation {worst_block:e}");
    assert!(worst_match < 1e-10, "closed form deviation {worst_match:e}");
}

#[test]
fn exponentials_match_pade() {
    let mut r = rng(12);
    for _ in 0..1000 {
        let xi = random::se23_tangent::<f64, _>(&mut r, 5.0);
        let closed = exp_se23(&xi).to_matrix();
        let pade = xi.to_matrix().exp();
        assert!((closed - pade).abs().max() < 1e-10, "{}", (closed - pade).abs().max());

        let so3 = exp_so3(&xi.omega).into_matrix();
        let pade3 = insync::lie::skew(&xi.omega).exp();
        assert!((so3 - pade3).abs().max() < 1e-12);

        let eta = random::sim23_tangent::<f64, _>(&mut r, 5.0);
        let ours = exp_sim23(&eta).to_matrix();
        let pade = eta.to_matrix().exp();
        assert!((ours - pade).abs().max() < 1e-9 * pade.abs().max().max(1.0));
    }
}

#[test]
fn small_angle_branch_is_continuous() {
    for k in 0..40 {
        let theta = 10f64.powf(-2.0 - 0.25 * k as f64);
        let w = nalgebra::Vector3::new(theta, -0.5 * theta, 0.25 * theta);
        let xi = insync::lie::SE23Tangent::new(w, nalgebra::Matrix3x2::from_element(0.3));
        let diff = (exp_se23(&xi).to_matrix() - xi.to_matrix().exp()).abs().max();
        assert!(diff < 1e-14, "θ={theta:e}: {diff:e}");
    }
}

#[test]
fn long_composition_stays_orthonormal() {
    let mut r = rng(13);
    let steps: Vec<SE23Element<f64>> = (0..64).map(|_| exp_se23(&random::se23_tangent(&mut r, 0.5))).collect();
    let mut x = SE23Element::<f64>::identity();
    for k in 0..100_000 {
        x = x * steps[k % steps.len()];
        if k % 1000 == 999 {
            x = x.renormalized();
        }
    }
    let r = x.rotation.matrix();
    assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-9);
    assert!((r.determinant() - 1.0).abs() < 1e-9);
}

#[test]
fn identity_and_inverse() {
    let mut r = rng(14);
    for _ in 0..200 {
        let x: SE23Element<f64> = random::se23(&mut r, 20.0);
        assert!(((x * x.inverse()).to_matrix() - Matrix5::identity()).abs().max() < 1e-12);
        let z: SIM23Element<f64> = random::sim23(&mut r, 20.0, 1.0);
        let zi = z.inverse().unwrap();
        assert!(((z * zi).to_matrix() - Matrix5::identity()).abs().max() < 1e-11);
        assert!((zi.to_matrix() - dense_inverse(&z.to_matrix())).abs().max() < 1e-10);
    }
    let singular = SIM23Element::<f64>::new(
        insync::lie::Rot3::identity(),
        nalgebra::Matrix3x2::zeros(),
        Matrix2::new(1.0, 2.0, 2.0, 4.0),
    );
    assert!(singular.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn conjugation_is_a_group_automorphism(seed in any::<u64>()) {
        let mut r = rng(seed);
        let z: SIM23Element<f64> = random::sim23(&mut r, 5.0, 1.0);
        let x: SE23Element<f64> = random::se23(&mut r, 5.0);
        let y: SE23Element<f64> = random::se23(&mut r, 5.0);
        let lhs = conjugate(&z, &(x * y)).unwrap();
        let rhs = conjugate(&z, &x).unwrap() * conjugate(&z, &y).unwrap();
        prop_assert!((lhs.to_matrix() - rhs.to_matrix()).abs().max() < 1e-9);
        let inv = conjugate(&z, &x.inverse()).unwrap();
        prop_assert!((inv.to_matrix() - conjugate(&z, &x).unwrap().inverse().to_matrix()).abs().max() < 1e-9);
    }

    #[test]
    fn adjoint_matches_dense_and_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut r = rng(seed);
        let z: SIM23Element<f64> = random::sim23(&mut r, 5.0, 1.0);
        let d1 = random::se23_tangent::<f64, _>(&mut r, 2.0);
        let d2 = random::se23_tangent::<f64, _>(&mut r, 2.0);
        let zm = z.to_matrix();
        let dense = zm * d1.to_matrix() * dense_inverse(&zm);
        prop_assert!((adjoint(&z, &d1).unwrap().to_matrix() - dense).abs().max() < 1e-10);
        let lhs = adjoint(&z, &(d1 * a + d2 * b)).unwrap();
        let rhs = adjoint(&z, &d1).unwrap() * a + adjoint(&z, &d2).unwrap() * b;
        prop_assert!((lhs.to_matrix() - rhs.to_matrix()).abs().max() < 1e-10);
    }

    #[test]
    fn exp_of_conjugated_tangent_is_conjugated_exp(seed in any::<u64>()) {
        let mut r = rng(seed);
        let z: SIM23Element<f64> = random::sim23(&mut r, 5.0, 0.5);
        let d = random::se23_tangent::<f64, _>(&mut r, 2.0);
        let lhs = exp_se23(&adjoint(&z, &d).unwrap());
        let rhs = conjugate(&z, &exp_se23(&d)).unwrap();
        prop_assert!((lhs.to_matrix() - rhs.to_matrix()).abs().max() < 1e-9);
    }

    #[test]
    fn compose_matches_dense_product(seed in any::<u64>()) {
        let mut r = rng(seed);
        let z: SIM23Element<f64> = random::sim23(&mut r, 5.0, 1.0);
        let w: SIM23Element<f64> = random::sim23(&mut r, 5.0, 1.0);
        let x: SE23Element<f64> = random::se23(&mut r, 5.0);
        prop_assert!(((z * w).to_matrix() - z.to_matrix() * w.to_matrix()).abs().max() < 1e-10);
        prop_assert!((z.compose_se23(&x).to_matrix() - z.to_matrix() * x.to_matrix()).abs().max() < 1e-10);
    }
}
