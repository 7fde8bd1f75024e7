//! Helpers shared by the integration tests: seeded random band-limited data
//! and a few independent quadrature oracles.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdsl_core::{Band, CylinderField, FieldState, SdSGeometry};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn desk() -> SdSGeometry {
    SdSGeometry::new(3.0, 0.1).unwrap()
}

/// A real field with coefficients uniform in the unit square, damped by
/// `(1 + ω² + ℓ(ℓ+1))^{-decay}` so that high modes stay small.
pub fn random_field(rng: &mut ChaCha8Rng, band: Band, decay: f64) -> CylinderField {
    let mut f = CylinderField::zeros(band, true);
    for m in band.modes().filter(|m| m.is_representative()) {
        let w = (1.0 + band.omega(m).powi(2) + m.ell_factor()).powf(-decay);
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        f.set(m, c * w);
    }
    f
}

/// Random real Cauchy data on Σ_r.
pub fn random_state(rng: &mut ChaCha8Rng, geom: &SdSGeometry, band: Band, r: f64, decay: f64) -> FieldState {
    let u = random_field(rng, band, decay);
    let du = random_field(rng, band, decay);
    FieldState::from_fields(geom, r, &u, &du).unwrap()
}

/// Adaptive Simpson quadrature.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `Δ(r)` written out independently of the library.
pub fn delta(lambda: f64, mass: f64, r: f64) -> f64 {
    lambda / 3.0 * r * r - 1.0 + 2.0 * mass / r
}

/// `∫_a^b ds/(s²Δ(s))`, the radial mode with unit first integral.
pub fn radial_integral(lambda: f64, mass: f64, a: f64, b: f64) -> f64 {
    // Substitute s = e^x to even out the integrand over decades.
    let f = |x: f64| {
        let s = x.exp();
        s / (s * s * delta(lambda, mass, s))
    };
    simpson(&f, a.ln(), b.ln(), 1e-15)
}

/// `∫_r^∞ ds/(s²Δ(s))`, via `s = 1/x`.
pub fn radial_tail(lambda: f64, mass: f64, r: f64) -> f64 {
    // ds/(s²Δ) = dx/Δ(1/x) = x² dx /(Λ/3 − x² + 2m x³).
    let f = |x: f64| x * x / (lambda / 3.0 - x * x + 2.0 * mass * x * x * x);
    simpson(&f, 0.0, 1.0 / r, 1e-16)
}
