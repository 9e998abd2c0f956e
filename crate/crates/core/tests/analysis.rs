mod common;

use common::rng;
use insync::analysis::*;
use insync::lie::{SE23Element, Vec3};
use insync::random;
use nalgebra::{Matrix2, SymmetricEigen};
use proptest::prelude::*;

fn eigenvalues(series: &[Vec<Vec3<f64>>], dt: f64) -> Vec<f64> {
    let w = pe_check(series, dt, 1.0, 0.1).unwrap();
    w.iter().map(|w| w.gram_min_eig).collect()
}

#[test]
fn pe_constant_directions() {
    let only_z: Vec<Vec<Vec3<f64>>> = (0..101).map(|_| vec![Vec3::z()]).collect();
    let w = pe_check(&only_z, 0.1, 5.0, 0.1).unwrap();
    assert!(w.iter().all(|w| w.gram_min_eig.abs() < 1e-12 && !w.passes()));
    let two: Vec<Vec<Vec3<f64>>> = (0..101).map(|_| vec![Vec3::x(), Vec3::y()]).collect();
    let w = pe_check(&two, 0.1, 5.0, 1.0).unwrap();
    assert!(w.iter().all(|w| (w.gram_min_eig - 5.0).abs() < 1e-9 && w.passes()));
    assert!(pe_check(&two, 0.1, 20.0, 1.0).is_err());
}

#[test]
fn pe_integral_matches_closed_form() {
    // μ(t) = (cos t, sin t, 0): ∫₀ᵀ (I − μμᵀ) dt has eigenvalues T/2 ± |sin T|/2 and T.
    let dt = 1e-3;
    let series: Vec<Vec<Vec3<f64>>> = (0..=4000).map(|k| {
        let t = k as f64 * dt;
        vec![Vec3::new(t.cos(), t.sin(), 0.0)]
    }).collect();
    let w = pe_check(&series, dt, 3.0, 0.1).unwrap();
    let first = w[0].gram_min_eig;
    let exact = 1.5 - 3.0f64.sin().abs() / 2.0;
    assert!((first - exact).abs() < 1e-6, "{first} vs {exact}");
}

#[test]
fn are_residual_at_newton_solution() {
    let k_q = Matrix2::new(10.0, 0.0, 0.0, 2.0);
    let p = common::solve_are(10.0, 10.0, &k_q);
    assert!(p.cholesky().is_some());
    assert!(riccati_residual(&p, 10.0, 10.0, &k_q, &Matrix2::zeros()) < 1e-8);
    let sd = common::shift();
    let r = riccati_residual(&Matrix2::identity(), 0.0, 0.0, &Matrix2::zeros(), &(sd + sd.transpose()));
    assert_eq!(r, 0.0);
}

#[test]
fn fd_rate_calculus_checks() {
    let sq = fd_rate(|x: &f64| x * x, |h| 1.5 + h, 1e-4);
    assert!((sq - 3.0).abs() < 1e-9);
    let sin = fd_rate(|x: &f64| x.sin(), |h| 0.3 + h, 1e-4);
    assert!((sin - 0.3f64.cos()).abs() < 1e-8);
    let exp = fd_rate(|x: &f64| x.exp(), |h| h, 1e-4);
    assert!((exp - 1.0).abs() < 1e-8);
    // second order: error ratio near 4 when h halves
    let err = |h: f64| (fd_rate(|x: &f64| x.powi(3) + x.exp(), |s| 0.7 + s, h) - (3.0 * 0.49 + 0.7f64.exp())).abs();
    let ratio = err(1e-2) / err(5e-3);
    assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
}

#[test]
fn linear_fit_recovers_line() {
    let x: Vec<f64> = (0..20).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|v| -0.5 * v + 2.0).collect();
    let f = linear_fit(&x, &y).unwrap();
    assert!((f.slope + 0.5).abs() < 1e-12 && (f.intercept - 2.0).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
    let norms: Vec<f64> = x.iter().map(|t| (-t).exp()).collect();
    let d = fit_log_decay(&x, &norms, 1e-5).unwrap();
    assert_eq!(d.samples, 12);
    assert!((d.slope + 1.0).abs() < 1e-12);
}

#[test]
fn metrics_between_states() {
    let x = SE23Element::from_parts(insync::lie::exp_so3(&Vec3::new(0.0, 0.0, 0.3)), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 3.0, 4.0));
    let m = ErrorMetrics::between(1.0, &x, &SE23Element::identity(), 0.0);
    assert!((m.attitude_angle - 0.3).abs() < 1e-14);
    assert_eq!(m.velocity_error, 1.0);
    assert_eq!(m.position_error, 5.0);
    let z = ErrorMetrics::between(0.0, &x, &x, 0.0);
    assert_eq!((z.attitude_angle, z.velocity_error, z.position_error), (0.0, 0.0, 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pe_spectrum_is_rotation_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let series: Vec<Vec<Vec3<f64>>> = (0..60).map(|_| vec![random::vec3(&mut r, 1.0), random::vec3(&mut r, 1.0)]).collect();
        let q = random::rotation::<f64, _>(&mut r);
        let rotated: Vec<Vec<Vec3<f64>>> = series.iter().map(|v| v.iter().map(|m| q * *m).collect()).collect();
        let gram = |s: &[Vec<Vec3<f64>>]| s.iter().fold(nalgebra::Matrix3::zeros(), |a, m| a + pe_integrand(m));
        let e1 = SymmetricEigen::new(gram(&series)).eigenvalues;
        let e2 = SymmetricEigen::new(gram(&rotated)).eigenvalues;
        let mut a: Vec<f64> = e1.iter().copied().collect();
        let mut b: Vec<f64> = e2.iter().copied().collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let (ea, eb) = (eigenvalues(&series, 0.1), eigenvalues(&rotated, 0.1));
        for (x, y) in ea.iter().zip(&eb) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }
}
