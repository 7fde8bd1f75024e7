//! Seeded random band-limited data.
//!
//! All draws go through one `ChaCha8` stream consumed in the canonical mode
//! order, so a seed fixes the data independently of the thread count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdsl_core::{Band, CylinderField, FieldState, Result, ScatteringData, SdSGeometry};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A real field whose representative coefficients are uniform in the unit
/// square, damped by `(1 + ω² + ℓ(ℓ+1))^{-decay}`.
pub fn random_field(rng: &mut ChaCha8Rng, band: Band, decay: f64) -> CylinderField {
    let mut f = CylinderField::zeros(band, true);
    for m in band.modes().filter(|m| m.is_representative()) {
        let w = (1.0 + band.omega(m).powi(2) + m.ell_factor()).powf(-decay);
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        f.set(m, c * w);
    }
    f
}

/// Random real boundary data `(ψ₀, ψ₃)`.
pub fn random_scattering_data(rng: &mut ChaCha8Rng, band: Band, decay: f64) -> ScatteringData {
    let psi0 = random_field(rng, band, decay);
    let psi3 = random_field(rng, band, decay);
    ScatteringData { psi0, psi3 }
}

/// Random real Cauchy data `(ψ, ∂_rψ)` on Σ_r.
pub fn random_cauchy(rng: &mut ChaCha8Rng, geom: &SdSGeometry, band: Band, r: f64, decay: f64) -> Result<FieldState> {
    let u = random_field(rng, band, decay);
    let du = random_field(rng, band, decay);
    FieldState::from_fields(geom, r, &u, &du)
}
