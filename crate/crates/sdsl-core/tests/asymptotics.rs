mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use sdsl_core::asymptotics::{box_of_monomial, psi2_from_psi0, wave_operator_mode};
use sdsl_core::scattering::log_log_slope;
use sdsl_core::{build_asymptotic, Band, CylinderField, ModeIndex, ModeParams};

fn band() -> Band {
    Band::new(2.0 * PI, 2, 2).unwrap()
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

#[test]
fn constant_data_is_exact() {
    let g = common::desk();
    let b = band();
    let c = CylinderField::single_mode(b, true, ModeIndex::new(0, 0, 0), Complex64::new(2.5, 0.0));
    let a = build_asymptotic(&c, &CylinderField::zeros(b, true), &g).unwrap();
    assert!(a.psi2.coeffs().iter().all(|v| v.norm() == 0.0));
    for r in [2.0, 30.0, 1e4] {
        let (res, norm) = a.residual(r).unwrap();
        assert!(res.iter().all(|v| v.norm() == 0.0));
        assert_eq!(norm, 0.0);
        let (u, du) = a.evaluate(ModeIndex::new(0, 0, 0), r).unwrap();
        assert_eq!((u, du), (Complex64::new(2.5, 0.0), Complex64::new(0.0, 0.0)));
    }
}

#[test]
fn psi2_for_time_mode() {
    let b = band();
    let f = CylinderField::single_mode(b, false, ModeIndex::new(1, 0, 0), one());
    let p2 = psi2_from_psi0(&f, 3.0);
    assert!((p2.get(ModeIndex::new(1, 0, 0)) - 0.5).norm() < 1e-15);
}

#[test]
fn psi3_only_is_pure_cube() {
    let g = common::desk();
    let b = band();
    let m = ModeIndex::new(1, 1, 1);
    let p3 = CylinderField::single_mode(b, false, m, one());
    let a = build_asymptotic(&CylinderField::zeros(b, false), &p3, &g).unwrap();
    let (u, du) = a.evaluate(m, 10.0).unwrap();
    assert!((u - 1e-3).norm() < 1e-18 && (du + 3e-4).norm() < 1e-18);
}

#[test]
fn evaluate_power_rule() {
    let g = common::desk();
    let b = band();
    let m = ModeIndex::new(1, 0, 0);
    // a₀ = 1 gives a₂ = 1/2 for this mode at Λ = 3.
    let a = build_asymptotic(&CylinderField::single_mode(b, false, m, one()), &CylinderField::zeros(b, false), &g).unwrap();
    let (u, du) = a.evaluate(m, 2.0).unwrap();
    assert!((u - 1.125).norm() < 1e-15 && (du + 0.125).norm() < 1e-15);
}

#[test]
fn monomial_leading_orders() {
    let g = common::desk();
    let b = band();
    let radial = ModeParams::new(&b, ModeIndex::new(0, 0, 0));
    assert_eq!(box_of_monomial(0, radial, 7.0, &g).unwrap(), Complex64::new(0.0, 0.0));
    // n = 3 is an exceptional power: r³·□(r⁻³) → 0.
    let v: Vec<f64> = [1e2, 1e3, 1e4].iter().map(|&r| (box_of_monomial(3, radial, r, &g).unwrap() * r.powi(3)).norm()).collect();
    assert!(v[0] > v[1] && v[1] > v[2] && v[2] < 1e-3);
    // n = 1: r·□(r⁻¹) → −(Λ/3)·1·(1 − 3) = 2, with O(r⁻²) corrections.
    let w: Vec<f64> = [1e2, 1e3].iter().map(|&r| (box_of_monomial(1, radial, r, &g).unwrap() * r).re).collect();
    assert!((w[0] - 2.0).abs() < 1e-3 && (w[1] - 2.0).abs() < 1e-5);
    let rich = (100.0 * w[1] - w[0]) / 99.0;
    assert!((rich - 2.0).abs() < 1e-7);
}

#[test]
fn operator_matches_independent_expansion() {
    // −r⁻²(r²Δu′)′ − ω²u/Δ − Lu/r² written out term by term.
    let g = common::desk();
    let p = ModeParams::from_omega(1.3, 2);
    let (r, u, du, ddu) = (3.0, Complex64::new(0.4, -0.1), Complex64::new(0.2, 0.3), Complex64::new(-0.5, 0.05));
    let d = common::delta(3.0, 0.1, r);
    let dp = 2.0 * r - 0.2 / (r * r);
    let q = r * r * d;
    let qp = 2.0 * r * d + r * r * dp;
    let expected = -(ddu * q + du * qp) / (r * r) - u * (1.3f64 * 1.3 / d) - u * (6.0 / (r * r));
    let got = wave_operator_mode(&g, p, r, u, du, ddu);
    assert!((got - expected).norm() < 1e-14 * expected.norm().max(1.0));
}

fn slope_of_weighted_norm(psi0: &CylinderField, psi3: &CylinderField) -> f64 {
    let g = common::desk();
    let a = build_asymptotic(psi0, psi3, &g).unwrap();
    let radii: Vec<f64> = [20.0, 40.0, 80.0].iter().map(|x| x * g.r_c()).collect();
    let norms: Vec<f64> = radii.iter().map(|&r| a.weighted_norm(r).unwrap()).collect();
    log_log_slope(&radii, &norms).unwrap()
}

#[test]
fn residual_decay_orders() {
    let b = Band::new(2.0 * PI, 3, 3).unwrap();
    let mut rng = common::rng(23);
    let psi0 = common::random_field(&mut rng, b, 1.0);
    let psi3 = common::random_field(&mut rng, b, 1.0);
    let s = slope_of_weighted_norm(&psi0, &psi3);
    assert!((s + 2.0).abs() < 0.05, "generic slope {s}");
    // The r⁻⁵ coefficient of □(r⁻³) is (6 − 3ω²/Λ − L)·a₃; pick a mode where
    // it is not nearly cancelled so the 2m·r⁻⁶ correction stays subleading.
    let single = CylinderField::single_mode(b, true, ModeIndex::new(1, 0, 0), Complex64::new(0.6, 0.2));
    let s = slope_of_weighted_norm(&CylinderField::zeros(b, true), &single);
    assert!((s + 3.0).abs() < 0.05, "psi3-only slope {s}");
}

#[test]
fn remainder_source_is_minus_box() {
    let g = common::desk();
    let b = band();
    let mut rng = common::rng(2);
    let a = build_asymptotic(&common::random_field(&mut rng, b, 0.0), &common::random_field(&mut rng, b, 0.0), &g).unwrap();
    let src = a.remainder_source();
    use sdsl_core::SourceTerm;
    let m = ModeIndex::new(2, 1, -1);
    for r in [2.0, 9.0] {
        assert!((src.value(m, r) + a.residual_mode(m, r)).norm() < 1e-15);
        // Derivative by central differences.
        let h = 1e-4 * r;
        let fd = (a.residual_mode(m, r + h) - a.residual_mode(m, r - h)) / (2.0 * h);
        assert!((a.residual_mode_derivative(m, r) - fd).norm() < 1e-6 * fd.norm().max(1e-12));
    }
}
