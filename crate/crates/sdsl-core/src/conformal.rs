//! The wave equation near the conformal boundary ρ = 1/r → 0 for metrics
//! of the form `g = ρ⁻²g̃`, restricted to t-independent, spherically symmetric
//! `g̃` whose inverse is diagonal:
//!
//! ```text
//! g̃^{ρρ} = a(ρ),   g̃^{tt} = b(ρ),   g̃^{ij} = c(ρ)γ^{ij}.
//! ```
//!
//! `□_gψ = 0` is equivalent to `□_{g̃}ψ − (2a/ρ)∂_ρψ = 0`, which per mode reads
//!
//! ```text
//! a u″ + (e − 2a/ρ) u′ − k u = 0,   k = bω² + cℓ(ℓ+1),
//! e = ½a′ − ½ab′/b − ac′/c   (the ∂_ρ drift of □_{g̃}).
//! ```
//!
//! Inserting `ψ₀ + ρ²ψ₂ + ρ³log ρ ψ₃₁ + ρ³ψ₃` and matching orders ρ⁰ and ρ¹:
//!
//! ```text
//! ψ₂ = −k₀ψ₀/(2a₀),      ψ₃₁ = [k₁ψ₀ − (2e₀ − 2a₁)ψ₂]/(3a₀),
//! ```
//!
//! so the log term is switched on exactly by the first-order Taylor data
//! (`a₁`, `k₁`) and the O(1) drift `e₀` — the quantities that vanish in the
//! class without log terms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::energy::resolving_grid;
use crate::error::{Error, Result};
use crate::evolution::ModeParams;
use crate::fit::{extrapolate_to_zero, least_squares};
use crate::geometry::SdSGeometry;
use crate::ode::Dopri5;
use crate::scattering::{active_modes, log_log_slope, ScatteringData};
use crate::spectral::{synthesize_on_grid, Band, CylinderField, ModeIndex};

/// Number of stored Taylor coefficients (orders 0 through 3).
pub const TAYLOR_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassTag {
    /// First-order Taylor data may be present; log terms can appear.
    G1,
    /// First-order Taylor data and the O(1) drift vanish; no log term.
    G2,
}

/// How the components are evaluated away from ρ = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelKind {
    /// Schwarzschild–de Sitter (de Sitter when the mass is zero).
    SdS { mass: f64 },
    /// `g̃ = −(3/Λ)dρ² + (1 + ερ)h` with h the boundary metric.
    SyntheticG1 { epsilon: f64 },
    /// Components given by their (truncated) Taylor polynomials.
    Polynomial,
}

/// Taylor coefficients in ρ at ρ = 0 of the inverse-metric components and
/// the drift, orders 0..=3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaylorData {
    pub rho_rho: [f64; TAYLOR_ORDER],
    pub tt: [f64; TAYLOR_ORDER],
    pub angular: [f64; TAYLOR_ORDER],
    pub drift: [f64; TAYLOR_ORDER],
}

/// A conformal metric model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricModel {
    pub lambda: f64,
    pub class_tag: ClassTag,
    pub kind: ModelKind,
    pub taylor: TaylorData,
}

/// Values of `a, b, c, e` and the derivatives needed at one ρ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Components {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

fn poly_d(c: &[f64], x: f64) -> f64 {
    c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (j, v)| acc * x + j as f64 * v)
}

/// Series product truncated to the stored order.
fn series_mul(p: &[f64; TAYLOR_ORDER], q: &[f64; TAYLOR_ORDER]) -> [f64; TAYLOR_ORDER] {
    let mut out = [0.0; TAYLOR_ORDER];
    for i in 0..TAYLOR_ORDER {
        for j in 0..TAYLOR_ORDER - i {
            out[i + j] += p[i] * q[j];
        }
    }
    out
}

fn series_div(p: &[f64; TAYLOR_ORDER], q: &[f64; TAYLOR_ORDER]) -> [f64; TAYLOR_ORDER] {
    let mut out = [0.0; TAYLOR_ORDER];
    for n in 0..TAYLOR_ORDER {
        let mut s = p[n];
        for j in 1..=n {
            s -= q[j] * out[n - j];
        }
        out[n] = s / q[0];
    }
    out
}

fn series_deriv(p: &[f64; TAYLOR_ORDER]) -> [f64; TAYLOR_ORDER] {
    let mut out = [0.0; TAYLOR_ORDER];
    for j in 1..TAYLOR_ORDER {
        out[j - 1] = j as f64 * p[j];
    }
    out
}

/// Drift series `e = ½a′ − ½a b′/b − a c′/c` from the component series.
/// Exact through the stored order when the components are polynomials of
/// that degree; otherwise the top coefficient needs one more input order.
fn drift_series(a: &[f64; TAYLOR_ORDER], b: &[f64; TAYLOR_ORDER], c: &[f64; TAYLOR_ORDER]) -> [f64; TAYLOR_ORDER] {
    let da = series_deriv(a);
    let lb = series_div(&series_deriv(b), b);
    let lc = series_div(&series_deriv(c), c);
    let ab = series_mul(a, &lb);
    let ac = series_mul(a, &lc);
    let mut e = [0.0; TAYLOR_ORDER];
    for j in 0..TAYLOR_ORDER {
        e[j] = 0.5 * da[j] - 0.5 * ab[j] - ac[j];
    }
    e
}

/// Schwarzschild–de Sitter in the conformal chart: `a = −D`, `b = 1/D`,
/// `c = 1` with `D(ρ) = Λ/3 − ρ² + 2mρ³`.
pub fn sds_in_rho(geom: &SdSGeometry) -> MetricModel {
    sds_model(geom.lambda(), geom.mass())
}

/// de Sitter (`m = 0`) in the same chart.
pub fn de_sitter(lambda: f64) -> Result<MetricModel> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter { what: "lambda", value: lambda });
    }
    Ok(sds_model(lambda, 0.0))
}

fn sds_model(lambda: f64, mass: f64) -> MetricModel {
    let l3 = lambda / 3.0;
    let i3 = 3.0 / lambda;
    let a = [-l3, 0.0, 1.0, -2.0 * mass];
    // 1/D = (3/Λ)(1 + (3/Λ)ρ² − (6m/Λ)ρ³ + O(ρ⁴)).
    let b = [i3, 0.0, i3 * i3, -i3 * 6.0 * mass / lambda];
    let c = [1.0, 0.0, 0.0, 0.0];
    MetricModel {
        lambda,
        class_tag: ClassTag::G2,
        kind: ModelKind::SdS { mass },
        // e = −D′ exactly; the truncated series would lose its cubic term.
        taylor: TaylorData { rho_rho: a, tt: b, angular: c, drift: [0.0, 2.0, -6.0 * mass, 0.0] },
    }
}

/// The synthetic family `g̃ = −(3/Λ)dρ² + (1 + ερ)h`; G1 for ε ≠ 0.
pub fn synthetic_g1(lambda: f64, epsilon: f64) -> Result<MetricModel> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter { what: "lambda", value: lambda });
    }
    if !(epsilon.is_finite() && epsilon.abs() < 1.0) {
        return Err(Error::InvalidParameter { what: "epsilon", value: epsilon });
    }
    let i3 = 3.0 / lambda;
    let geo = |s: f64| [s, -s * epsilon, s * epsilon * epsilon, -s * epsilon * epsilon * epsilon];
    let a = [-lambda / 3.0, 0.0, 0.0, 0.0];
    let b = geo(i3);
    let c = geo(1.0);
    Ok(MetricModel {
        lambda,
        class_tag: if epsilon == 0.0 { ClassTag::G2 } else { ClassTag::G1 },
        kind: ModelKind::SyntheticG1 { epsilon },
        taylor: TaylorData { rho_rho: a, tt: b, angular: c, drift: geo(-0.5 * lambda * epsilon) },
    })
}

impl MetricModel {
    /// A model whose components are the given Taylor polynomials.
    pub fn polynomial(lambda: f64, class_tag: ClassTag, rho_rho: [f64; 4], tt: [f64; 4], angular: [f64; 4]) -> Result<Self> {
        let m = MetricModel {
            lambda,
            class_tag,
            kind: ModelKind::Polynomial,
            taylor: TaylorData { rho_rho, tt, angular, drift: drift_series(&rho_rho, &tt, &angular) },
        };
        m.validate()?;
        Ok(m)
    }

    /// Check the boundary values `a₀ = −Λ/3`, `b₀ = 3/Λ`, `c₀ = 1` and the
    /// declared class against the first-order data.
    pub fn validate(&self) -> Result<()> {
        let t = &self.taylor;
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParameter { what: "lambda", value: self.lambda });
        }
        if t.rho_rho[0].abs() < 1e-12 {
            return Err(Error::SingularMatch { leading: t.rho_rho[0] });
        }
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * y.abs().max(1.0);
        if !close(t.rho_rho[0], -self.lambda / 3.0) {
            return Err(Error::InvalidParameter { what: "g^rho rho(0) (must be -lambda/3)", value: t.rho_rho[0] });
        }
        if !close(t.tt[0], 3.0 / self.lambda) {
            return Err(Error::InvalidParameter { what: "g^tt(0) (must be 3/lambda)", value: t.tt[0] });
        }
        if !close(t.angular[0], 1.0) {
            return Err(Error::InvalidParameter { what: "angular component at 0 (must be 1)", value: t.angular[0] });
        }
        if self.class_tag == ClassTag::G2 && self.detect_class(1e-12) != ClassTag::G2 {
            return Err(Error::InvalidParameter { what: "class tag G2 with first-order data", value: self.first_order_norm() });
        }
        Ok(())
    }

    /// Size of the data that distinguishes the classes: first-order
    /// coefficients of the components and the O(1) drift.
    pub fn first_order_norm(&self) -> f64 {
        let t = &self.taylor;
        t.rho_rho[1].abs().max(t.tt[1].abs()).max(t.angular[1].abs()).max(t.drift[0].abs())
    }

    /// Classify from the Taylor data.
    pub fn detect_class(&self, tol: f64) -> ClassTag {
        if self.first_order_norm() <= tol {
            ClassTag::G2
        } else {
            ClassTag::G1
        }
    }

    /// Component values at ρ.
    pub fn components(&self, rho: f64) -> Components {
        match self.kind {
            ModelKind::SdS { mass } => {
                let d = self.lambda / 3.0 - rho * rho + 2.0 * mass * rho * rho * rho;
                let dp = -2.0 * rho + 6.0 * mass * rho * rho;
                Components { a: -d, b: 1.0 / d, c: 1.0, e: -dp }
            }
            ModelKind::SyntheticG1 { epsilon } => {
                let s = 1.0 + epsilon * rho;
                Components {
                    a: -self.lambda / 3.0,
                    b: 3.0 / (self.lambda * s),
                    c: 1.0 / s,
                    e: -0.5 * self.lambda * epsilon / s,
                }
            }
            ModelKind::Polynomial => {
                let t = &self.taylor;
                let (a, b, c) = (poly(&t.rho_rho, rho), poly(&t.tt, rho), poly(&t.angular, rho));
                let e = 0.5 * poly_d(&t.rho_rho, rho) - 0.5 * a * poly_d(&t.tt, rho) / b - a * poly_d(&t.angular, rho) / c;
                Components { a, b, c, e }
            }
        }
    }

    /// `(a, e − 2a/ρ, k)` of the mode operator at ρ.
    pub fn mode_coefficients(&self, p: ModeParams, rho: f64) -> (f64, f64, f64) {
        let c = self.components(rho);
        (c.a, c.e - 2.0 * c.a / rho, c.b * p.omega_sq + c.c * p.ell_factor)
    }

    /// `a u″ + (e − 2a/ρ)u′ − k u` on a jet.
    pub fn apply(&self, p: ModeParams, rho: f64, u: Complex64, du: Complex64, ddu: Complex64) -> Complex64 {
        let (a, d1, k) = self.mode_coefficients(p, rho);
        ddu * a + du * d1 - u * k
    }

    fn k_series(&self, p: ModeParams) -> [f64; TAYLOR_ORDER] {
        let t = &self.taylor;
        let mut k = [0.0; TAYLOR_ORDER];
        for j in 0..TAYLOR_ORDER {
            k[j] = t.tt[j] * p.omega_sq + t.angular[j] * p.ell_factor;
        }
        k
    }
}

/// `ψ₀ + ρ²ψ₂ + ρ³log ρ ψ₃₁ + ρ³ψ₃` in the conformal chart.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalAsymptoticSolution {
    pub psi0: CylinderField,
    pub psi2: CylinderField,
    pub psi3: CylinderField,
    pub psi31: CylinderField,
    pub model: MetricModel,
}

/// Determine ψ₂ and ψ₃₁ from ψ₀ by matching orders ρ⁰ and ρ¹.
pub fn build_asymptotic_conformal(
    psi0: &CylinderField,
    psi3: &CylinderField,
    model: &MetricModel,
) -> Result<ConformalAsymptoticSolution> {
    if psi0.band() != psi3.band() {
        return Err(Error::BandMismatch);
    }
    let t = &model.taylor;
    let a0 = t.rho_rho[0];
    if a0.abs() < 1e-12 {
        return Err(Error::SingularMatch { leading: a0 });
    }
    let band = psi0.band();
    let mut psi2 = CylinderField::zeros(band, psi0.is_real());
    let mut psi31 = CylinderField::zeros(band, psi0.is_real());
    for mode in active_modes(&band, psi0.is_real()) {
        let p = ModeParams::new(&band, mode);
        let k = model.k_series(p);
        let c0 = psi0.get(mode);
        let c2 = c0 * (-k[0] / (2.0 * a0));
        let c31 = (c0 * k[1] - c2 * (2.0 * t.drift[0] - 2.0 * t.rho_rho[1])) / (3.0 * a0);
        psi2.set(mode, c2);
        psi31.set(mode, c31);
    }
    Ok(ConformalAsymptoticSolution { psi0: psi0.clone(), psi2, psi3: psi3.clone(), psi31, model: *model })
}

impl ConformalAsymptoticSolution {
    pub fn band(&self) -> Band {
        self.psi0.band()
    }

    /// `(u, u_ρ, u_ρρ)` of one mode at ρ.
    pub fn jet(&self, mode: ModeIndex, rho: f64) -> [Complex64; 3] {
        let (c0, c2, c3, cl) = (self.psi0.get(mode), self.psi2.get(mode), self.psi3.get(mode), self.psi31.get(mode));
        let l = rho.ln();
        let r2 = rho * rho;
        let u = c0 + c2 * r2 + c3 * (r2 * rho) + cl * (r2 * rho * l);
        let du = c2 * (2.0 * rho) + c3 * (3.0 * r2) + cl * (r2 * (3.0 * l + 1.0));
        let ddu = c2 * 2.0 + c3 * (6.0 * rho) + cl * (rho * (6.0 * l + 5.0));
        [u, du, ddu]
    }

    /// The mode operator applied to the expansion, evaluated directly.
    pub fn residual_mode(&self, mode: ModeIndex, rho: f64) -> Complex64 {
        let [u, du, ddu] = self.jet(mode, rho);
        self.model.apply(ModeParams::new(&self.band(), mode), rho, u, du, ddu)
    }

    /// The residual as a spectral field at ρ.
    pub fn residual_field(&self, rho: f64) -> CylinderField {
        let band = self.band();
        let real = self.psi0.is_real() && self.psi3.is_real();
        let mut f = CylinderField::zeros(band, real);
        for mode in active_modes(&band, real) {
            f.set(mode, self.residual_mode(mode, rho));
        }
        f
    }
}

/// Decay of the residual over ρ-samples, including a per-mode model
/// comparison that detects a `ρ² log ρ` leading term.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualOrderReport {
    pub rho: Vec<f64>,
    /// Grid sup of the residual at each ρ.
    pub sup_residual: Vec<f64>,
    /// Power-law slope of the raw sup-residual.
    pub slope: Option<f64>,
    /// RMS deviation (in log) of the raw power-law fit.
    pub fit_rms: f64,
    /// Slope after subtracting the fitted `ρ² log ρ` part of every mode.
    pub slope_log_factored: Option<f64>,
    /// Largest fitted `ρ² log ρ` coefficient relative to the largest value
    /// of `|R|/ρ²` over the samples (zero when the residual has no log term).
    pub relative_log_coefficient: f64,
    /// Relative RMS misfit of the per-mode fit without a log column.
    pub misfit_without_log: f64,
    /// Relative RMS misfit of the per-mode fit with the log column.
    pub misfit_with_log: f64,
}

impl ResidualOrderReport {
    /// Whether the model comparison prefers a `ρ² log ρ` term.
    pub fn log_detected(&self) -> bool {
        self.misfit_without_log > 100.0 * self.misfit_with_log.max(1e-9)
    }
}

fn fit_rms(x: &[f64], y: &[f64], slope: Option<f64>) -> f64 {
    let Some(s) = slope else { return 0.0 };
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(_, y)| **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let c = pts.iter().map(|p| p.1 - s * p.0).sum::<f64>() / n;
    (pts.iter().map(|p| (p.1 - s * p.0 - c).powi(2)).sum::<f64>() / n).sqrt()
}

/// Fit `R/ρ² ≈ B + Dρ + Fρ² + Hρ³ + log ρ·(A + Cρ + Eρ²)` (or the same
/// without the log columns when `with_log` is false). Returns the
/// coefficient `A` and the relative RMS misfit.
fn residual_model_fit(rho: &[f64], values: &[Complex64], with_log: bool) -> Result<(Complex64, f64)> {
    let rows: Vec<Vec<f64>> = rho
        .iter()
        .map(|&r| {
            let mut row = vec![1.0, r, r * r, r * r * r];
            if with_log {
                let l = r.ln();
                row.extend_from_slice(&[l, r * l, r * r * l]);
            }
            row
        })
        .collect();
    let y: Vec<Complex64> = rho.iter().zip(values).map(|(r, v)| v / (r * r)).collect();
    let re: Vec<f64> = y.iter().map(|c| c.re).collect();
    let im: Vec<f64> = y.iter().map(|c| c.im).collect();
    let ls = least_squares(&rows, &[re.clone(), im.clone()], 1e15)?;
    let (sr, si) = (&ls.solutions[0], &ls.solutions[1]);
    let mut misfit = 0.0;
    for (row, (yr, yi)) in rows.iter().zip(re.iter().zip(&im)) {
        let fr: f64 = row.iter().zip(sr).map(|(a, b)| a * b).sum();
        let fi: f64 = row.iter().zip(si).map(|(a, b)| a * b).sum();
        misfit += (fr - yr).powi(2) + (fi - yi).powi(2);
    }
    let norm: f64 = y.iter().map(|c| c.norm_sqr()).sum();
    let rel = if norm == 0.0 { 0.0 } else { (misfit / norm).sqrt() };
    let a = if with_log { Complex64::new(sr[4], si[4]) } else { Complex64::new(0.0, 0.0) };
    Ok((a, rel))
}

fn grid_sup(f: &CylinderField, grid: &(Vec<f64>, Vec<f64>, Vec<f64>)) -> f64 {
    synthesize_on_grid(f, &grid.0, &grid.1, &grid.2)
        .iter()
        .map(|v| if f.is_real() { v.re.abs() } else { v.norm() })
        .fold(0.0, f64::max)
}

/// Fitted decay order of the residual at the given ρ-samples (at least eight,
/// all in `(0, 0.1]`).
pub fn conformal_residual_order(asymp: &ConformalAsymptoticSolution, rho_samples: &[f64]) -> Result<ResidualOrderReport> {
    for &r in rho_samples {
        if !(r > 0.0 && r <= 0.1) {
            return Err(Error::InvalidParameter { what: "rho sample (need 0 < rho <= 0.1)", value: r });
        }
    }
    if rho_samples.len() < 8 {
        return Err(Error::InvalidParameter { what: "number of rho samples (need >= 8)", value: rho_samples.len() as f64 });
    }
    let band = asymp.band();
    let grid = resolving_grid(&band);
    let fields: Vec<CylinderField> = rho_samples.iter().map(|&rho| asymp.residual_field(rho)).collect();
    let real = fields[0].is_real();
    let mut corrected = fields.clone();
    let (mut max_a, mut max_b, mut mis_no, mut mis_log) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for mode in active_modes(&band, real) {
        let values: Vec<Complex64> = fields.iter().map(|f| f.get(mode)).collect();
        if values.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let (a, m1) = residual_model_fit(rho_samples, &values, true)?;
        let (_, m0) = residual_model_fit(rho_samples, &values, false)?;
        max_a = max_a.max(a.norm());
        max_b = values.iter().zip(rho_samples).map(|(v, r)| v.norm() / (r * r)).fold(max_b, f64::max);
        mis_log = mis_log.max(m1);
        mis_no = mis_no.max(m0);
        for (f, &rho) in corrected.iter_mut().zip(rho_samples) {
            let v = f.get(mode) - a * (rho * rho * rho.ln());
            f.set(mode, v);
        }
    }
    let sup_residual: Vec<f64> = fields.iter().map(|f| grid_sup(f, &grid)).collect();
    let sup_corrected: Vec<f64> = corrected.iter().map(|f| grid_sup(f, &grid)).collect();
    let slope = log_log_slope(rho_samples, &sup_residual);
    Ok(ResidualOrderReport {
        fit_rms: fit_rms(rho_samples, &sup_residual, slope),
        slope_log_factored: log_log_slope(rho_samples, &sup_corrected),
        relative_log_coefficient: if max_b > 0.0 { max_a / max_b } else { 0.0 },
        misfit_without_log: mis_no,
        misfit_with_log: mis_log,
        rho: rho_samples.to_vec(),
        sup_residual,
        slope,
    })
}

/// Integrate one mode of `a u″ + (e − 2a/ρ)u′ − k u = F(ρ)` from `rho0` to
/// `rho1` with state `(u, u_ρ)`.
#[allow(clippy::too_many_arguments)]
pub fn evolve_conformal(
    model: &MetricModel,
    p: ModeParams,
    rho0: f64,
    u: Complex64,
    du: Complex64,
    rho1: f64,
    source: Option<&dyn Fn(f64) -> Complex64>,
    stepper: &Dopri5,
) -> Result<(Complex64, Complex64)> {
    for r in [rho0, rho1] {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter { what: "rho", value: r });
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut y = [u.re, u.im, du.re, du.im];
    let rhs = |rho: f64, y: &[f64], d: &mut [f64]| {
        let (a, d1, k) = model.mode_coefficients(p, rho);
        let uu = Complex64::new(y[0], y[1]);
        let vv = Complex64::new(y[2], y[3]);
        let f = source.map_or(zero, |s| s(rho));
        let dv = (f - vv * d1 + uu * k) / a;
        d[0] = y[2];
        d[1] = y[3];
        d[2] = dv.re;
        d[3] = dv.im;
    };
    stepper.integrate(rhs, rho0, &mut y, rho1)?;
    Ok((Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])))
}

/// A band-limited state `(ψ, ∂_ρψ)` on a level set of ρ.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalState {
    pub rho: f64,
    pub u: CylinderField,
    pub du_drho: CylinderField,
}

/// `½ρ⁻⁴ w Σ[(−a)|u_ρ|² + k|u|²]` with `w = b^{-1/2}c^{-1}` (the flux of the
/// ρ⁻⁴-weighted normal multiplier).
pub fn conformal_flux(model: &MetricModel, state: &ConformalState) -> f64 {
    let rho = state.rho;
    let c = model.components(rho);
    let w = 1.0 / (c.b.sqrt() * c.c);
    let band = state.u.band();
    let mut total = 0.0;
    for mode in band.modes() {
        let p = ModeParams::new(&band, mode);
        let k = c.b * p.omega_sq + c.c * p.ell_factor;
        total += -c.a * state.du_drho.get(mode).norm_sqr() + k * state.u.get(mode).norm_sqr();
    }
    0.5 * w * total / rho.powi(4)
}

/// Outcome of the backward construction in the conformal chart.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedBackwardReport {
    pub rho0: f64,
    /// `R` values of the schedule (`ρ_R = 1/R`).
    pub schedule: Vec<f64>,
    pub per_radius: Vec<ConformalState>,
    /// Extrapolation of `per_radius` to `R = ∞`.
    pub extrapolated: ConformalState,
    /// Square roots of the weighted fluxes of successive differences at ρ₀.
    pub gaps: Vec<f64>,
    pub rate_fit: Option<f64>,
}

/// Backward construction with zero data at `ρ_R = 1/R` for each R of the
/// schedule, forcing `−L[ψ_asymp]`, ending at `rho0`.
pub fn weighted_backward_check(
    model: &MetricModel,
    data: &ScatteringData,
    rho0: f64,
    schedule: &[f64],
    rel_tol: f64,
) -> Result<WeightedBackwardReport> {
    if !(rho0 > 0.0 && rho0.is_finite()) {
        return Err(Error::InvalidParameter { what: "rho0", value: rho0 });
    }
    if schedule.is_empty() || schedule.windows(2).any(|w| !(w[1] > w[0])) || !(1.0 / schedule[0] < rho0) {
        return Err(Error::InvalidParameter { what: "schedule", value: schedule.first().copied().unwrap_or(f64::NAN) });
    }
    let asymp = build_asymptotic_conformal(&data.psi0, &data.psi3, model)?;
    let band = data.band();
    let real = data.is_real();
    let stepper = Dopri5::new(rel_tol, rel_tol * 1e-4);
    let zero = Complex64::new(0.0, 0.0);
    let mut per_radius: Vec<ConformalState> = schedule
        .iter()
        .map(|_| ConformalState { rho: rho0, u: CylinderField::zeros(band, real), du_drho: CylinderField::zeros(band, real) })
        .collect();
    let mut extrapolated = per_radius[0].clone();
    let xs: Vec<f64> = schedule.iter().map(|r| 1.0 / r).collect();
    for mode in active_modes(&band, real) {
        let p = ModeParams::new(&band, mode);
        let [ua, dua, _] = asymp.jet(mode, rho0);
        let c = (asymp.psi0.get(mode), asymp.psi3.get(mode));
        let mut rems = Vec::with_capacity(schedule.len());
        for &big_r in schedule {
            let rem = if c == (zero, zero) {
                (zero, zero)
            } else {
                let src = |rho: f64| -asymp.residual_mode(mode, rho);
                evolve_conformal(model, p, 1.0 / big_r, zero, zero, rho0, Some(&src), &stepper).map_err(|e| e.for_mode(mode))?
            };
            rems.push(rem);
        }
        for (st, rem) in per_radius.iter_mut().zip(&rems) {
            st.u.set(mode, ua + rem.0);
            st.du_drho.set(mode, dua + rem.1);
        }
        let ex = |f: &dyn Fn(&(Complex64, Complex64)) -> Complex64| {
            let re: Vec<f64> = rems.iter().map(|r| f(r).re).collect();
            let im: Vec<f64> = rems.iter().map(|r| f(r).im).collect();
            Complex64::new(extrapolate_to_zero(&xs, &re), extrapolate_to_zero(&xs, &im))
        };
        extrapolated.u.set(mode, ua + ex(&|r| r.0));
        extrapolated.du_drho.set(mode, dua + ex(&|r| r.1));
    }
    let mut gaps = Vec::with_capacity(schedule.len().saturating_sub(1));
    for w in per_radius.windows(2) {
        let d = ConformalState {
            rho: rho0,
            u: w[1].u.linear_combination(1.0, &w[0].u, -1.0)?,
            du_drho: w[1].du_drho.linear_combination(1.0, &w[0].du_drho, -1.0)?,
        };
        gaps.push(conformal_flux(model, &d).sqrt());
    }
    let scale = conformal_flux(model, per_radius.last().expect("nonempty schedule")).sqrt();
    for i in 1..gaps.len() {
        if gaps[i - 1] > 1e-12 * scale && !(gaps[i] < gaps[i - 1]) {
            return Err(Error::NonConvergent {
                detail: format!("weighted gaps do not decrease: {:.3e} after {:.3e}", gaps[i], gaps[i - 1]),
            });
        }
    }
    let rate_fit = log_log_slope(&schedule[..gaps.len()], &gaps);
    Ok(WeightedBackwardReport { rho0, schedule: schedule.to_vec(), per_radius, extrapolated, gaps, rate_fit })
}

/// Default ρ-samples for residual-order fits: geometric in `[10⁻⁴, 10⁻²]`.
pub fn default_rho_samples() -> Vec<f64> {
    (0..9).map(|i| 1e-4 * 10f64.powf(i as f64 * 0.25)).collect()
}
