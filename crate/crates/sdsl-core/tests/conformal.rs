mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use sdsl_core::conformal::*;
use sdsl_core::evolution::evolve_flux;
use sdsl_core::ode::Dopri5;
use sdsl_core::scattering::{default_schedule, solve_backward};
use sdsl_core::{build_asymptotic, Band, CylinderField, Error, IntegratorConfig, ModeIndex, ModeParams, ScatteringData, SdSGeometry};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn band() -> Band {
    Band::new(2.0 * PI, 2, 2).unwrap()
}

fn generic(seed: u64) -> ScatteringData {
    let mut rng = common::rng(seed);
    let b = band();
    ScatteringData::new(common::random_field(&mut rng, b, 1.0), common::random_field(&mut rng, b, 1.0)).unwrap()
}

fn max_coeff(f: &CylinderField) -> f64 {
    f.coeffs().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[test]
fn sds_model_taylor_data() {
    let g = common::desk();
    let m = sds_in_rho(&g);
    assert_eq!(m.class_tag, ClassTag::G2);
    assert_eq!(m.taylor.rho_rho[0], -1.0);
    assert_eq!(m.taylor.rho_rho[1], 0.0);
    assert_eq!(m.taylor.rho_rho[2], 1.0);
    // The mass enters at third order: −(Λ/3 − ρ² + 2mρ³).
    assert!((m.taylor.rho_rho[3] + 0.2).abs() < 1e-15);
    let ds = de_sitter(3.0).unwrap();
    assert_eq!(ds.taylor.rho_rho, [-1.0, 0.0, 1.0, 0.0]);
    assert!(m.validate().is_ok() && ds.validate().is_ok());
}

#[test]
fn conformal_evolution_matches_inverse_radius_branch() {
    let g = common::desk();
    let model = sds_in_rho(&g);
    let cfg = IntegratorConfig::new(&g).with_tolerances(1e-12, 1e-16);
    let stepper = Dopri5::new(1e-12, 1e-16);
    for (w, l) in [(0.0, 0), (1.0, 1), (3.0, 4)] {
        let p = ModeParams::from_omega(w, l);
        let (ra, rb) = (2.0 * g.r_c(), 500.0 * g.r_c());
        let (u0, du0) = (c(1.0, 0.5), c(-0.3, 0.2));
        let (u1, p1) = evolve_flux(&g, p, ra, u0, g.q(ra) * du0, rb, None, &cfg).unwrap();
        let (v1, dv1) = evolve_conformal(&model, p, 1.0 / ra, u0, -ra * ra * du0, 1.0 / rb, None, &stepper).unwrap();
        assert!((u1 - v1).norm() < 1e-9, "u: {}", (u1 - v1).norm());
        assert!((p1 / g.q(rb) + dv1 / (rb * rb)).norm() < 1e-9);
    }
}

#[test]
fn radial_first_integral_through_conformal_pipeline() {
    // r²Δu′ = 1 with D = ρ²Δ reads du/dρ = −ρ²/D(ρ).
    let g = common::desk();
    let model = sds_in_rho(&g);
    let stepper = Dopri5::new(1e-12, 1e-16);
    let (ra, rb) = (2.0, 200.0);
    let p = ModeParams::from_omega(0.0, 0);
    let d = |rho: f64| 1.0 - rho * rho + 0.2 * rho * rho * rho;
    let (u, du) = evolve_conformal(&model, p, 1.0 / ra, c(0.0, 0.0), c(-1.0 / (ra * ra * d(1.0 / ra)), 0.0), 1.0 / rb, None, &stepper).unwrap();
    let exact = common::radial_integral(3.0, 0.1, ra, rb);
    assert!((u.re - exact).abs() < 1e-9 * exact);
    assert!((du.re + 1.0 / (rb * rb * d(1.0 / rb))).abs() < 1e-9 / (rb * rb));
}

#[test]
fn synthetic_model_data() {
    let m0 = synthetic_g1(3.0, 0.0).unwrap();
    assert_eq!(m0.class_tag, ClassTag::G2);
    assert_eq!(m0.detect_class(1e-12), ClassTag::G2);
    let m = synthetic_g1(3.0, 0.1).unwrap();
    assert_eq!(m.class_tag, ClassTag::G1);
    assert_eq!(m.detect_class(1e-12), ClassTag::G1);
    assert!((m.taylor.angular[1] + 0.1).abs() < 1e-16);
    assert!((m.taylor.tt[1] + 0.1).abs() < 1e-16);
    assert!(m.validate().is_ok());
    assert!(synthetic_g1(3.0, 2.0).unwrap_err().is_invalid_input());
}

#[test]
fn psi2_agrees_with_r_pipeline_and_log_term_vanishes_for_sds() {
    let mut rng = common::rng(10);
    for _ in 0..10 {
        let lambda = rng.gen_range(0.5..5.0);
        let mass = rng.gen_range(0.05..0.95) / (3.0 * f64::sqrt(lambda));
        let g = SdSGeometry::new(lambda, mass).unwrap();
        let b = band();
        let p0 = common::random_field(&mut rng, b, 0.0);
        let p3 = common::random_field(&mut rng, b, 0.0);
        let conf = build_asymptotic_conformal(&p0, &p3, &sds_in_rho(&g)).unwrap();
        let plain = build_asymptotic(&p0, &p3, &g).unwrap();
        let d = conf.psi2.linear_combination(1.0, &plain.psi2, -1.0).unwrap();
        assert!(max_coeff(&d) < 1e-12 * max_coeff(&plain.psi2).max(1.0));
        assert_eq!(max_coeff(&conf.psi31), 0.0);
    }
}

#[test]
fn constant_data_on_synthetic_model() {
    let b = band();
    let p0 = CylinderField::single_mode(b, true, ModeIndex::new(0, 0, 0), c(2.0, 0.0));
    let a = build_asymptotic_conformal(&p0, &CylinderField::zeros(b, true), &synthetic_g1(3.0, 0.1).unwrap()).unwrap();
    assert_eq!(max_coeff(&a.psi2), 0.0);
    assert_eq!(max_coeff(&a.psi31), 0.0);
}

#[test]
fn log_coefficient_is_linear_in_epsilon() {
    let b = band();
    let m = ModeIndex::new(1, 0, 0);
    let p0 = CylinderField::single_mode(b, true, m, c(1.0, 0.0));
    let z = CylinderField::zeros(b, true);
    let at = |eps: f64| build_asymptotic_conformal(&p0, &z, &synthetic_g1(3.0, eps).unwrap()).unwrap().psi31.get(m);
    let (full, half) = (at(0.1), at(0.05));
    assert!(full.norm() > 1e-4);
    let ratio = full.norm() / half.norm();
    assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
    // Independent order-matching: ψ₃₁ = −ε(3/Λ)ω²ψ₀/(2Λ) for an ℓ = 0 mode.
    assert!((full - c(-0.1 / 6.0, 0.0)).norm() < 1e-15);
}

#[test]
fn degenerate_leading_coefficient_is_rejected() {
    let r = MetricModel::polynomial(3.0, ClassTag::G2, [0.0, 0.0, 1.0, 0.0], [1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]);
    assert!(matches!(r, Err(Error::SingularMatch { .. })));
    let bad = MetricModel::polynomial(3.0, ClassTag::G2, [-1.0, 0.3, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]);
    assert!(bad.unwrap_err().is_invalid_input());
}

#[test]
fn polynomial_g2_model_has_no_log_term() {
    let m = MetricModel::polynomial(3.0, ClassTag::G2, [-1.0, 0.0, 0.7, 0.1], [1.0, 0.0, -0.4, 0.2], [1.0, 0.0, 0.3, 0.0]).unwrap();
    assert_eq!(m.detect_class(1e-12), ClassTag::G2);
    let a = build_asymptotic_conformal(&generic(2).psi0, &generic(2).psi3, &m).unwrap();
    assert_eq!(max_coeff(&a.psi31), 0.0);
    let rep = conformal_residual_order(&a, &default_rho_samples()).unwrap();
    assert!((rep.slope.unwrap() - 2.0).abs() < 0.1);
    assert!(!rep.log_detected());
}

#[test]
fn residual_orders() {
    let g = common::desk();
    let b = band();
    let sds = sds_in_rho(&g);
    let rho = default_rho_samples();
    let data = generic(4);
    let z = CylinderField::zeros(b, true);
    let gen = conformal_residual_order(&build_asymptotic_conformal(&data.psi0, &data.psi3, &sds).unwrap(), &rho).unwrap();
    assert!((gen.slope.unwrap() - 2.0).abs() < 0.1);
    assert!(!gen.log_detected());
    let only3 = conformal_residual_order(&build_asymptotic_conformal(&z, &data.psi3, &sds).unwrap(), &rho).unwrap();
    assert!((only3.slope.unwrap() - 3.0).abs() < 0.1);
    let zero = conformal_residual_order(&build_asymptotic_conformal(&z, &z, &sds).unwrap(), &rho).unwrap();
    assert!(zero.sup_residual.iter().all(|v| *v == 0.0));
    // G1: the model comparison detects the ρ² log ρ term; once removed the
    // decay is a clean ρ².
    let g1 = synthetic_g1(3.0, 0.1).unwrap();
    let rep = conformal_residual_order(&build_asymptotic_conformal(&data.psi0, &data.psi3, &g1).unwrap(), &rho).unwrap();
    assert!(rep.log_detected(), "{rep:?}");
    assert!(rep.misfit_without_log > 1e3 * rep.misfit_with_log);
    assert!((rep.slope_log_factored.unwrap() - 2.0).abs() < 0.1);
    assert!(rep.relative_log_coefficient > 0.0);
    assert!(conformal_residual_order(&build_asymptotic_conformal(&data.psi0, &z, &g1).unwrap(), &[0.2; 8]).is_err());
}

#[test]
fn weighted_backward_matches_scattering_pipeline() {
    let g = common::desk();
    let sds = sds_in_rho(&g);
    let cfg = IntegratorConfig::new(&g).with_tolerances(1e-12, 1e-16);
    let r0 = 1.5 * g.r_c();
    let sched = default_schedule(&g);
    let data = generic(6);
    let plain = solve_backward(&data, &g, r0, &sched, &cfg).unwrap();
    let conf = weighted_backward_check(&sds, &data, 1.0 / r0, &sched, 1e-12).unwrap();
    for (a, b) in plain.per_radius.iter().zip(&conf.per_radius) {
        let du = a.u_field().linear_combination(1.0, &b.u, -1.0).unwrap();
        let dd = a.du_field().linear_combination(1.0, &b.du_drho, 1.0 / (r0 * r0)).unwrap();
        assert!(max_coeff(&du) < 1e-7 && max_coeff(&dd) < 1e-7);
    }
    let dx = plain.field_at_r0.u_field().linear_combination(1.0, &conf.extrapolated.u, -1.0).unwrap();
    assert!(max_coeff(&dx) < 1e-7);
    assert!(conf.gaps.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn weighted_backward_constant_and_g1() {
    let g = common::desk();
    let b = band();
    let r0 = 1.5 * g.r_c();
    let sched = default_schedule(&g);
    let konst = ScatteringData::new(
        CylinderField::single_mode(b, true, ModeIndex::new(0, 0, 0), c(1.0, 0.0)),
        CylinderField::zeros(b, true),
    )
    .unwrap();
    let rep = weighted_backward_check(&sds_in_rho(&g), &konst, 1.0 / r0, &sched, 1e-12).unwrap();
    assert!(rep.gaps.iter().all(|v| *v == 0.0));
    assert_eq!(rep.extrapolated.u.get(ModeIndex::new(0, 0, 0)), c(1.0, 0.0));
    // G1: the source carries ρ² log ρ, still integrable against ρ⁻⁴ weights,
    // so the gaps still decrease monotonically at first order.
    let rep = weighted_backward_check(&synthetic_g1(3.0, 0.1).unwrap(), &generic(6), 1.0 / r0, &sched, 1e-12).unwrap();
    assert!(rep.gaps.windows(2).all(|w| w[1] < w[0]));
    let rate = rep.rate_fit.unwrap();
    assert!((rate + 1.0).abs() < 0.15, "{rate}");
    assert!(weighted_backward_check(&sds_in_rho(&g), &konst, 1.0 / r0, &[1.0], 1e-12).unwrap_err().is_invalid_input());
}
