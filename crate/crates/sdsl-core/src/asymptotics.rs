//! The fixed asymptotic solution `ψ_asymp = ψ₀ + ψ₂/r² + ψ₃/r³` and its exact
//! residual under the coordinate wave operator.
//!
//! Per mode (`∂_t² → −ω²`, `Δ_{S²} → −ℓ(ℓ+1)`) the operator reads
//! `□u = −ω²u/Δ − r⁻²(r²Δu′)′ − ℓ(ℓ+1)u/r²`. Applied to `r⁻ⁿ` it gives exactly
//!
//! ```text
//! □(r⁻ⁿ) = −(Λ/3)n(n−3)r⁻ⁿ + [n(n−1) + μ] r⁻ⁿ⁻² − 2mn² r⁻ⁿ⁻³ − ω² g(r) r⁻ⁿ,
//! μ = −((3/Λ)ω² + ℓ(ℓ+1)),   g(r) = (1 − 2m/r)/((Λ/3) r² Δ),
//! ```
//!
//! using `1/Δ = 3/(Λr²) + g(r)`. Summing the three monomials with the matched
//! ψ₂ makes the r⁻² terms cancel algebraically, so the residual below is
//! evaluated without catastrophic cancellation even at very large r.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::evolution::{ModeParams, SourceTerm};
use crate::geometry::SdSGeometry;
use crate::spectral::{Band, CylinderField, ModeIndex};

/// `ψ_asymp` built from free data `(ψ₀, ψ₃)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticSolution {
    pub psi0: CylinderField,
    pub psi2: CylinderField,
    pub psi3: CylinderField,
    /// Coefficient of `r⁻³ log r`; never present on the exact background.
    pub psi31: Option<CylinderField>,
    pub geometry: SdSGeometry,
}

/// Coefficients `(a₀, a₂, a₃)` of one mode of `ψ_asymp`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeCoefficients {
    pub a0: Complex64,
    pub a2: Complex64,
    pub a3: Complex64,
}

/// ψ₂ = −(3/(2Λ)) Δ̃ψ₀, from matching the r⁻² order of the monomial identities.
pub fn psi2_from_psi0(psi0: &CylinderField, lambda: f64) -> CylinderField {
    psi0.apply_symbol(|w2, l| -(3.0 / (2.0 * lambda)) * CylinderField::conformal_laplacian_symbol(lambda, w2, l))
}

pub fn build_asymptotic(psi0: &CylinderField, psi3: &CylinderField, geom: &SdSGeometry) -> Result<AsymptoticSolution> {
    if psi0.band() != psi3.band() {
        return Err(Error::BandMismatch);
    }
    Ok(AsymptoticSolution {
        psi0: psi0.clone(),
        psi2: psi2_from_psi0(psi0, geom.lambda()),
        psi3: psi3.clone(),
        psi31: None,
        geometry: *geom,
    })
}

/// The direct per-mode coordinate wave operator applied to a radial jet.
pub fn wave_operator_mode(
    geom: &SdSGeometry,
    params: ModeParams,
    r: f64,
    u: Complex64,
    du: Complex64,
    ddu: Complex64,
) -> Complex64 {
    let delta = geom.delta(r);
    let dp = geom.delta_prime(r);
    -u * (params.omega_sq / delta) - ddu * delta - du * (dp + 2.0 * delta / r) - u * (params.ell_factor / (r * r))
}

/// `□(r⁻ⁿ · basis element)` evaluated directly from the coordinate operator
/// (no use of the expansion), per unit amplitude.
pub fn box_of_monomial(n: u32, params: ModeParams, r: f64, geom: &SdSGeometry) -> Result<Complex64> {
    geom.check_radius(r)?;
    let nf = n as f64;
    let u = r.powi(-(n as i32));
    let du = -nf * r.powi(-(n as i32) - 1);
    let ddu = nf * (nf + 1.0) * r.powi(-(n as i32) - 2);
    Ok(wave_operator_mode(geom, params, r, Complex64::new(u, 0.0), Complex64::new(du, 0.0), Complex64::new(ddu, 0.0)))
}

impl AsymptoticSolution {
    pub fn band(&self) -> Band {
        self.psi0.band()
    }

    pub fn params(&self, mode: ModeIndex) -> ModeParams {
        ModeParams::new(&self.band(), mode)
    }

    pub fn coefficients(&self, mode: ModeIndex) -> ModeCoefficients {
        ModeCoefficients { a0: self.psi0.get(mode), a2: self.psi2.get(mode), a3: self.psi3.get(mode) }
    }

    /// `(u, du/dr)` of one mode at radius r, exact for the stored terms.
    pub fn evaluate(&self, mode: ModeIndex, r: f64) -> Result<(Complex64, Complex64)> {
        self.geometry.check_radius(r)?;
        Ok(eval_coefficients(self.coefficients(mode), r))
    }

    /// Per-mode `□ψ_asymp` at radius r (cancellation-free closed form).
    pub fn residual_mode(&self, mode: ModeIndex, r: f64) -> Complex64 {
        residual_closed_form(&self.geometry, self.params(mode), self.coefficients(mode), r)
    }

    /// d/dr of [`AsymptoticSolution::residual_mode`].
    pub fn residual_mode_derivative(&self, mode: ModeIndex, r: f64) -> Complex64 {
        residual_closed_form_derivative(&self.geometry, self.params(mode), self.coefficients(mode), r)
    }

    /// All mode residuals at r together with `‖r φ^{1/2} □ψ_asymp‖_{L²(Σ_r)}`.
    pub fn residual(&self, r: f64) -> Result<(Vec<Complex64>, f64)> {
        self.geometry.check_radius(r)?;
        let band = self.band();
        let values: Vec<Complex64> = band.modes().map(|m| self.residual_mode(m, r)).collect();
        let norm = weighted_norm_from(&values, r);
        Ok((values, norm))
    }

    /// `‖r φ^{1/2} □ψ_asymp‖_{L²(Σ_r)}`; with the measure `r²φ⁻¹dt dμ_γ` the
    /// lapse cancels and the norm is `r² (Σ|□ψ_mode|²)^{1/2}`.
    pub fn weighted_norm(&self, r: f64) -> Result<f64> {
        Ok(self.residual(r)?.1)
    }

    /// `F = −□ψ_asymp`, the forcing of the remainder equation.
    pub fn remainder_source(&self) -> RemainderSource<'_> {
        RemainderSource { asymp: self }
    }
}

pub(crate) fn weighted_norm_from(values: &[Complex64], r: f64) -> f64 {
    r * r * values.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn eval_coefficients(c: ModeCoefficients, r: f64) -> (Complex64, Complex64) {
    let ir = 1.0 / r;
    let ir2 = ir * ir;
    let ir3 = ir2 * ir;
    let u = c.a0 + c.a2 * ir2 + c.a3 * ir3;
    let du = -(c.a2 * (2.0 * ir3)) - c.a3 * (3.0 * ir3 * ir);
    (u, du)
}

/// `g(r) = (1 − 2m/r)/((Λ/3) r²Δ)` and its derivative.
fn g_and_derivative(geom: &SdSGeometry, r: f64) -> (f64, f64) {
    let l3 = geom.lambda() / 3.0;
    let q = geom.q(r);
    let qp = geom.q_prime(r);
    let m = geom.mass();
    let num = 1.0 - 2.0 * m / r;
    let g = num / (l3 * q);
    let gp = (2.0 * m / (r * r) * q - num * qp) / (l3 * q * q);
    (g, gp)
}

pub(crate) fn residual_closed_form(geom: &SdSGeometry, p: ModeParams, c: ModeCoefficients, r: f64) -> Complex64 {
    let lambda = geom.lambda();
    let m = geom.mass();
    let mu = -((3.0 / lambda) * p.omega_sq + p.ell_factor);
    let (g, _) = g_and_derivative(geom, r);
    let ir = 1.0 / r;
    let ir2 = ir * ir;
    let ir3 = ir2 * ir;
    let ir4 = ir2 * ir2;
    let s = c.a0 + c.a2 * ir2 + c.a3 * ir3;
    let matched = c.a0 * mu + c.a2 * (2.0 * lambda / 3.0);
    matched * ir2 - s * (p.omega_sq * g) + c.a2 * ((2.0 + mu) * ir4) - c.a2 * (8.0 * m * ir4 * ir)
        + c.a3 * ((6.0 + mu) * ir4 * ir)
        - c.a3 * (18.0 * m * ir4 * ir2)
}

pub(crate) fn residual_closed_form_derivative(
    geom: &SdSGeometry,
    p: ModeParams,
    c: ModeCoefficients,
    r: f64,
) -> Complex64 {
    let lambda = geom.lambda();
    let m = geom.mass();
    let mu = -((3.0 / lambda) * p.omega_sq + p.ell_factor);
    let (g, gp) = g_and_derivative(geom, r);
    let ir = 1.0 / r;
    let ir2 = ir * ir;
    let ir3 = ir2 * ir;
    let ir4 = ir2 * ir2;
    let s = c.a0 + c.a2 * ir2 + c.a3 * ir3;
    let ds = -(c.a2 * (2.0 * ir3)) - c.a3 * (3.0 * ir4);
    let matched = c.a0 * mu + c.a2 * (2.0 * lambda / 3.0);
    matched * (-2.0 * ir3) - (s * gp + ds * g) * p.omega_sq - c.a2 * (4.0 * (2.0 + mu) * ir4 * ir)
        + c.a2 * (40.0 * m * ir4 * ir2)
        - c.a3 * (5.0 * (6.0 + mu) * ir4 * ir2)
        + c.a3 * (108.0 * m * ir4 * ir3)
}

/// Source `F = −□ψ_asymp` for the remainder equation `□ψ_rem = F`.
#[derive(Clone, Copy, Debug)]
pub struct RemainderSource<'a> {
    asymp: &'a AsymptoticSolution,
}

impl SourceTerm for RemainderSource<'_> {
    fn value(&self, mode: ModeIndex, r: f64) -> Complex64 {
        -self.asymp.residual_mode(mode, r)
    }
    fn derivative(&self, mode: ModeIndex, r: f64) -> Complex64 {
        -self.asymp.residual_mode_derivative(mode, r)
    }
}
