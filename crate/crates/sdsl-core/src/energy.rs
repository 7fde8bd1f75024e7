//! Energy fluxes through Σ_r, bulk currents, commuted energies and the
//! associated identities, all evaluated mode by mode.
//!
//! For a mode coefficient `w` of a (possibly commuted) field the flux of the
//! ∂_r multiplier is `½[Q|w′|² + (r²ω²/Δ)|w|² + L|w|²]` with `Q = r²Δ` and
//! `L = ℓ(ℓ+1)`; the `M = r²φ⁻²∂_r` flux carries an extra factor `Q`. The bulk
//! terms are defined so that `dE/dr = −bulk` along homogeneous solutions:
//!
//! ```text
//! bulk(∂_r) = Σ ½Q′|w′|² + ω²(r − 3m)Δ⁻²|w|²,
//! bulk(M)   = −Σ [2r³ω² + ½Q′L] |w|²,        ½Q′ = r((2Λ/3)r² − 1 + m/r).
//! ```
//!
//! The ∂_t² weight of the ∂_r bulk follows from `(r²/Δ)′ = −2(r − 3m)/Δ²`.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::evolution::{mode_trajectory, FieldState, IntegratorConfig, ModeParams, ModeState, SourceTerm};
use crate::geometry::SdSGeometry;
use crate::spectral::{gauss_legendre, synthesize_on_grid, Band, ModeIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MultiplierKind {
    /// The coordinate vector field ∂_r.
    DR,
    /// `M = r²φ⁻²∂_r`.
    M,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CommutatorKind {
    None,
    /// `X_s = rφ⁻²∂_r`.
    Xs,
    /// `X_w = r²φ⁻²∂_r`.
    Xw,
    /// `Y ∘ X_s` with `Y = rφ⁻¹∂_r`.
    YXs,
}

impl MultiplierKind {
    pub fn name(&self) -> &'static str {
        match self {
            MultiplierKind::DR => "DR",
            MultiplierKind::M => "M",
        }
    }
}

impl CommutatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommutatorKind::None => "None",
            CommutatorKind::Xs => "Xs",
            CommutatorKind::Xw => "Xw",
            CommutatorKind::YXs => "YXs",
        }
    }
}

/// The equation a state is known to satisfy, needed for second derivatives.
#[derive(Clone, Copy)]
pub enum Equation<'a> {
    Homogeneous,
    Forced(&'a dyn SourceTerm),
    Unknown,
}

/// Value and r-derivative of a commuted field's mode coefficient.
pub fn commuted_pair(
    geom: &SdSGeometry,
    params: ModeParams,
    state: &ModeState,
    comm: CommutatorKind,
    eq: Equation<'_>,
) -> Result<(Complex64, Complex64)> {
    let r = state.r;
    let (u, du) = (state.u, state.du);
    if comm == CommutatorKind::None {
        return Ok((u, du));
    }
    let (f, df) = match eq {
        Equation::Homogeneous => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        Equation::Forced(s) => (s.value(state.mode, r), s.derivative(state.mode, r)),
        Equation::Unknown => return Err(Error::MissingSecondDerivative),
    };
    let delta = geom.delta(r);
    let r2 = r * r;
    let v = r2 * params.omega_sq / delta + params.ell_factor;
    let p = du * geom.q(r);
    let dp = -u * v - f * r2;
    // (r²/Δ)′ = −2(r − 3m)/Δ².
    let dv = -2.0 * params.omega_sq * (r - 3.0 * geom.mass()) / (delta * delta);
    let ddp = -u * dv - du * v - (f * (2.0 * r) + df * r2);
    Ok(match comm {
        CommutatorKind::None => unreachable!(),
        CommutatorKind::Xs => (p / r, dp / r - p / r2),
        CommutatorKind::Xw => (p, dp),
        CommutatorKind::YXs => {
            let s = delta.sqrt();
            let v1 = dp / r - p / r2;
            let v2 = ddp / r - dp * (2.0 / r2) + p * (2.0 / (r2 * r));
            (v1 * (r * s), v1 * (s + r * geom.delta_prime(r) / (2.0 * s)) + v2 * (r * s))
        }
    })
}

fn flux_density(geom: &SdSGeometry, params: ModeParams, r: f64, w: Complex64, dw: Complex64, mult: MultiplierKind) -> f64 {
    let q = geom.q(r);
    let e = 0.5 * (q * dw.norm_sqr() + (r * r * params.omega_sq / geom.delta(r) + params.ell_factor) * w.norm_sqr());
    match mult {
        MultiplierKind::DR => e,
        MultiplierKind::M => q * e,
    }
}

fn bulk_density(geom: &SdSGeometry, params: ModeParams, r: f64, w: Complex64, dw: Complex64, mult: MultiplierKind) -> f64 {
    let half_qp = 0.5 * geom.q_prime(r);
    match mult {
        MultiplierKind::DR => {
            let delta = geom.delta(r);
            half_qp * dw.norm_sqr() + params.omega_sq * (r - 3.0 * geom.mass()) / (delta * delta) * w.norm_sqr()
        }
        MultiplierKind::M => -(2.0 * r * r * r * params.omega_sq + half_qp * params.ell_factor) * w.norm_sqr(),
    }
}

/// `∫_{Σ_r} J^X[Cψ]·n dμ` summed over all modes in fixed order.
pub fn flux(fs: &FieldState, mult: MultiplierKind, comm: CommutatorKind, eq: Equation<'_>) -> Result<f64> {
    let g = &fs.geometry;
    let mut total = 0.0;
    for s in &fs.states {
        let p = fs.params(s.mode);
        let (w, dw) = commuted_pair(g, p, s, comm, eq)?;
        total += flux_density(g, p, fs.r, w, dw, mult);
    }
    Ok(total)
}

/// `∫_{Σ_r} φK^X[ψ] dμ` for the uncommuted field.
pub fn bulk_current(fs: &FieldState, mult: MultiplierKind) -> f64 {
    bulk_current_commuted(fs, mult, CommutatorKind::None, Equation::Unknown).expect("uncommuted bulk needs no equation")
}

/// Bulk current evaluated on a commuted field.
pub fn bulk_current_commuted(fs: &FieldState, mult: MultiplierKind, comm: CommutatorKind, eq: Equation<'_>) -> Result<f64> {
    let g = &fs.geometry;
    let mut total = 0.0;
    for s in &fs.states {
        let p = fs.params(s.mode);
        let (w, dw) = commuted_pair(g, p, s, comm, eq)?;
        total += bulk_density(g, p, fs.r, w, dw, mult);
    }
    Ok(total)
}

/// Flux and bulk of one mode state.
pub fn mode_flux_and_bulk(geom: &SdSGeometry, params: ModeParams, s: &ModeState, mult: MultiplierKind) -> (f64, f64) {
    (flux_density(geom, params, s.r, s.u, s.du, mult), bulk_density(geom, params, s.r, s.u, s.du, mult))
}

/// Check `d/dr flux = −bulk` along a homogeneous solution of one mode.
///
/// The solution starts from the fixed generic data `u = 1 + 0.5i`,
/// `u′ = −0.3 + 0.2i` at the left end of the interval; the derivative is a
/// five-point central difference at 16 interior radii. Returns the largest
/// defect relative to `max(|dE/dr|, |bulk|, E/r)`.
pub fn divergence_identity_check(
    geom: &SdSGeometry,
    band: &Band,
    mode: ModeIndex,
    interval: (f64, f64),
    mult: MultiplierKind,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let (a, b) = interval;
    geom.check_radius(a)?;
    if !(b > a) {
        return Err(Error::InvalidParameter { what: "interval end", value: b });
    }
    let params = ModeParams::new(band, mode);
    let start = ModeState::new(mode, a, Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.2));
    let n = 16;
    let mut radii = Vec::with_capacity(5 * n);
    let mut centers = Vec::with_capacity(n);
    for i in 0..n {
        // Log-spaced centres, kept away from the ends by the stencil width.
        let frac = (i as f64 + 1.0) / (n as f64 + 1.0);
        let c = a * (b / a).powf(frac);
        let h = 1e-2 * c.min(c - a).min(b - c) / 2.0;
        centers.push((c, h));
        for j in -2i32..=2 {
            radii.push(c + j as f64 * h);
        }
    }
    let traj = mode_trajectory(geom, band, &start, &radii, None, cfg)?;
    let mut worst = 0.0f64;
    for (i, &(c, h)) in centers.iter().enumerate() {
        let e: Vec<f64> = (0..5).map(|j| mode_flux_and_bulk(geom, params, &traj[5 * i + j], mult).0).collect();
        let de = (e[0] - 8.0 * e[1] + 8.0 * e[3] - e[4]) / (12.0 * h);
        let (e_c, bulk) = mode_flux_and_bulk(geom, params, &traj[5 * i + 2], mult);
        let scale = de.abs().max(bulk.abs()).max(e_c / c);
        if scale > 0.0 {
            worst = worst.max((de + bulk).abs() / scale);
        }
    }
    Ok(worst)
}

/// A radial jet `(u, u′, u″, u‴)` of one mode at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub r: f64,
    pub u: [Complex64; 4],
}

impl Jet {
    /// The jet of a homogeneous solution through `(u, u′)`, with the higher
    /// derivatives taken from the equation and its r-derivative.
    pub fn of_solution(geom: &SdSGeometry, params: ModeParams, r: f64, u: Complex64, du: Complex64) -> Self {
        let q = geom.q(r);
        let qp = geom.q_prime(r);
        let qpp = geom.q_second(r);
        let delta = geom.delta(r);
        let v = r * r * params.omega_sq / delta + params.ell_factor;
        let dv = -2.0 * params.omega_sq * (r - 3.0 * geom.mass()) / (delta * delta);
        let dp = -u * v;
        let ddp = -u * dv - du * v;
        let u2 = (dp - du * qp) / q;
        let u3 = (ddp - u2 * (2.0 * qp) - du * qpp) / q;
        Jet { r, u: [u, du, u2, u3] }
    }
}

/// The three commutator multipliers `f` of the identity, with `f′` and `f″`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FChoice {
    /// `f = rφ⁻² = rΔ`.
    Xs,
    /// `f = r²φ⁻² = r²Δ`.
    Xw,
    /// `f = rφ⁻¹ = rΔ^{1/2}`.
    Y,
}

fn f_jet(geom: &SdSGeometry, choice: FChoice, r: f64) -> (f64, f64, f64) {
    let d = geom.delta(r);
    let d1 = geom.delta_prime(r);
    let d2 = geom.delta_second(r);
    match choice {
        FChoice::Xs => (r * d, d + r * d1, 2.0 * d1 + r * d2),
        FChoice::Xw => (geom.q(r), geom.q_prime(r), geom.q_second(r)),
        FChoice::Y => {
            let s = d.sqrt();
            (r * s, s + r * d1 / (2.0 * s), d1 / s + r * d2 / (2.0 * s) - r * d1 * d1 / (4.0 * d * s))
        }
    }
}

/// The coefficient `(f²/r²)·∂_r²(r²Δ/f)` of `∂_rψ` in the commuted equation,
/// with the magnitude of its largest constituent term (for relative checks).
pub fn middle_coefficient(geom: &SdSGeometry, choice: FChoice, r: f64) -> (f64, f64) {
    let (f, f1, f2) = f_jet(geom, choice, r);
    let q = geom.q(r);
    let q1 = geom.q_prime(r);
    let q2 = geom.q_second(r);
    let terms = [q2 * f, -2.0 * q1 * f1, -q * f2, 2.0 * q * f1 * f1 / f];
    let value = terms.iter().sum::<f64>() / (r * r);
    let scale = terms.iter().map(|t| t.abs()).fold(0.0, f64::max) / (r * r);
    (value, scale)
}

fn box_of_jet(geom: &SdSGeometry, p: ModeParams, r: f64, u: Complex64, du: Complex64, ddu: Complex64) -> Complex64 {
    let d = geom.delta(r);
    -u * (p.omega_sq / d) - ddu * d - du * (geom.delta_prime(r) + 2.0 * d / r) - u * (p.ell_factor / (r * r))
}

/// Both sides of the commutation identity for `X = f∂_r`:
///
/// ```text
/// □(Xψ) = X(□ψ) + (f²/r²)∂_r(r²Δ/f²)∂_r(Xψ) + (f²/r²)∂_r²(r²Δ/f)∂_rψ
///         + 2fΔ⁻²(1/r − 3m/r²)∂_t²ψ + (2f/r)□ψ,
/// ```
///
/// evaluated per mode on a jet. Returns `|LHS − RHS|` relative to the
/// largest term.
pub fn commuted_box_check(geom: &SdSGeometry, choice: FChoice, params: ModeParams, jet: &Jet) -> f64 {
    let r = jet.r;
    let [u, u1, u2, u3] = jet.u;
    let (f, f1, f2) = f_jet(geom, choice, r);
    let d = geom.delta(r);
    let d1 = geom.delta_prime(r);
    let d2 = geom.delta_second(r);
    let w = u1 * f;
    let w1 = u1 * f1 + u2 * f;
    let w2 = u1 * f2 + u2 * (2.0 * f1) + u3 * f;
    let lhs = box_of_jet(geom, params, r, w, w1, w2);

    let g = box_of_jet(geom, params, r, u, u1, u2);
    let (om2, l) = (params.omega_sq, params.ell_factor);
    let dg = -u1 * (om2 / d) + u * (om2 * d1 / (d * d)) - u2 * d1 - u3 * d
        - u1 * (d2 + 2.0 * d1 / r - 2.0 * d / (r * r))
        - u2 * (d1 + 2.0 * d / r)
        - u1 * (l / (r * r))
        + u * (2.0 * l / (r * r * r));
    let c1 = 2.0 * d / r + d1 - 2.0 * d * f1 / f;
    let (c2, _) = middle_coefficient(geom, choice, r);
    let ct = 2.0 * f / (d * d) * (1.0 / r - 3.0 * geom.mass() / (r * r));
    let terms = [dg * f, w1 * c1, u1 * c2, u * (-om2 * ct), g * (2.0 * f / r)];
    let rhs: Complex64 = terms.iter().sum();
    // Include the un-cancelled pieces of □(Xψ) so that exact cancellations
    // (e.g. X_wψ constant) are measured against the size of the inputs.
    let pieces = [(u3 * f).norm() * d, (u2 * f1).norm() * d, (u1 * f2).norm() * d, w1.norm() * d1.abs()];
    let scale = terms.iter().map(|t| t.norm()).chain(pieces).fold(lhs.norm(), f64::max);
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).norm() / scale
    }
}

/// One ledger row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LedgerRow {
    pub r: f64,
    pub multiplier: MultiplierKind,
    pub commutator: CommutatorKind,
    pub flux: f64,
    pub bulk: f64,
}

/// Fluxes along a homogeneous trajectory with the monotonicity verdicts.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub ledger: Vec<LedgerRow>,
    /// flux(∂_r) non-increasing within the slack.
    pub dr_non_increasing: bool,
    /// flux(M) non-decreasing within the slack.
    pub m_non_decreasing: bool,
    /// `sup_r flux(∂_r, X_s)(r) / [flux(∂_r, X_s)(r₀) + flux(∂_r)(r₀)]`.
    pub xs_ratio_sup: f64,
    /// `sup_r r⁻⁴flux(∂_r, X_w)(r) / [r₀⁻⁴flux(∂_r, X_w)(r₀) + flux(∂_r)(r₀)]`.
    pub xw_ratio_sup: f64,
    /// `sup_r flux(∂_r, YX_s)(r) / [flux(∂_r, YX_s)(r₀) + flux(∂_r, X_s)(r₀) + flux(∂_r)(r₀)]`.
    pub yxs_ratio_sup: f64,
}

impl MonotonicityReport {
    /// The higher-order verdicts for a given constant C.
    pub fn higher_order_bounded(&self, c: f64) -> (bool, bool, bool) {
        (self.xs_ratio_sup <= c, self.xw_ratio_sup <= c, self.yxs_ratio_sup <= c)
    }
}

const KINDS: [(MultiplierKind, CommutatorKind); 5] = [
    (MultiplierKind::DR, CommutatorKind::None),
    (MultiplierKind::M, CommutatorKind::None),
    (MultiplierKind::DR, CommutatorKind::Xs),
    (MultiplierKind::DR, CommutatorKind::Xw),
    (MultiplierKind::DR, CommutatorKind::YXs),
];

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Monotonicity and boundedness along a homogeneous trajectory sampled at
/// increasing radii; `slack` is the relative tolerance (10× the integrator's).
pub fn monotonicity_report(trajectory: &[FieldState], slack: f64) -> Result<MonotonicityReport> {
    let mut ledger = Vec::with_capacity(trajectory.len() * KINDS.len());
    let mut series: [Vec<f64>; 5] = Default::default();
    for fs in trajectory {
        for (k, &(mult, comm)) in KINDS.iter().enumerate() {
            let f = flux(fs, mult, comm, Equation::Homogeneous)?;
            let b = bulk_current_commuted(fs, mult, comm, Equation::Homogeneous)?;
            ledger.push(LedgerRow { r: fs.r, multiplier: mult, commutator: comm, flux: f, bulk: b });
            series[k].push(f);
        }
    }
    let pairs_ok = |s: &[f64], dec: bool| {
        s.windows(2).all(|w| if dec { w[1] <= w[0] * (1.0 + slack) } else { w[0] <= w[1] * (1.0 + slack) })
    };
    let dr_non_increasing = pairs_ok(&series[0], true);
    let m_non_decreasing = pairs_ok(&series[1], false);
    let (mut xs, mut xw, mut yxs) = (0.0f64, 0.0f64, 0.0f64);
    if let Some(first) = trajectory.first() {
        let r0 = first.r;
        let (e0, s0, w0, y0) = (series[0][0], series[2][0], series[3][0], series[4][0]);
        for (i, fs) in trajectory.iter().enumerate() {
            xs = xs.max(ratio(series[2][i], s0 + e0));
            xw = xw.max(ratio(series[3][i] / fs.r.powi(4), w0 / r0.powi(4) + e0));
            yxs = yxs.max(ratio(series[4][i], y0 + s0 + e0));
        }
    }
    Ok(MonotonicityReport {
        ledger,
        dr_non_increasing,
        m_non_decreasing,
        xs_ratio_sup: xs,
        xw_ratio_sup: xw,
        yxs_ratio_sup: yxs,
    })
}

/// Weight of the five commuted L² integrals in the Sobolev inequality:
/// `1 + ω² + L + ω²L + L²` for ψ, Tψ, Ωψ, TΩψ, ΩΩψ.
pub fn sobolev_weight(omega_sq: f64, ell_factor: f64) -> f64 {
    1.0 + omega_sq + ell_factor + omega_sq * ell_factor + ell_factor * ell_factor
}

/// A grid fine enough to resolve every mode of the band.
pub fn resolving_grid(band: &Band) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let nt = 4 * band.max_k as usize + 4;
    let nth = 2 * band.max_ell as usize + 4;
    let nph = 4 * band.max_ell as usize + 4;
    let ts = (0..nt).map(|a| a as f64 * band.period / nt as f64).collect();
    let (x, _) = gauss_legendre(nth);
    let thetas = x.iter().map(|x| x.acos()).collect();
    let phis = (0..nph).map(|c| c as f64 * 2.0 * core::f64::consts::PI / nph as f64).collect();
    (ts, thetas, phis)
}

/// `sup_grid|ψ|² · r³ / Σ(commuted L²(Σ_r) integrals)`, zero for the zero field.
pub fn sobolev_ratio(fs: &FieldState) -> f64 {
    let (ts, th, ph) = resolving_grid(&fs.band);
    let values = synthesize_on_grid(&fs.u_field(), &ts, &th, &ph);
    let sup = values.iter().map(|v| if fs.real { v.re * v.re } else { v.norm_sqr() }).fold(0.0, f64::max);
    let r = fs.r;
    let measure = r * r * fs.geometry.delta(r).sqrt();
    let den: f64 = fs
        .states
        .iter()
        .map(|s| {
            let p = fs.params(s.mode);
            sobolev_weight(p.omega_sq, p.ell_factor) * s.u.norm_sqr()
        })
        .sum::<f64>()
        * measure;
    if sup == 0.0 {
        0.0
    } else {
        sup * r * r * r / den
    }
}

/// Cauchy–Schwarz bound for [`sobolev_ratio`] on a band: with the addition
/// theorem `Σ_m|Y_ℓm|² = (2ℓ+1)/4π`,
/// `sup|ψ|² ≤ (Σ w|c|²) · Σ_{k,ℓ}(2ℓ+1)/(4πL·w)`.
pub fn sobolev_ratio_bound(band: &Band, geom: &SdSGeometry, r: f64) -> f64 {
    let mut c = 0.0;
    for k in -(band.max_k as i32)..=band.max_k as i32 {
        for ell in 0..=band.max_ell {
            let p = ModeParams::new(band, ModeIndex::new(k, ell, 0));
            c += (2 * ell + 1) as f64 / (4.0 * core::f64::consts::PI * band.period * sobolev_weight(p.omega_sq, p.ell_factor));
        }
    }
    c * r / geom.delta(r).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (SdSGeometry, Band) {
        (SdSGeometry::new(3.0, 0.1).unwrap(), Band::desk())
    }

    fn radial_state(g: &SdSGeometry, band: Band, r: f64, c: f64) -> FieldState {
        let mut fs = FieldState::zeros(g, band, true, r).unwrap();
        let i = band.index(ModeIndex::new(0, 0, 0)).unwrap();
        fs.states[i].u = Complex64::new(0.4, 0.0);
        fs.states[i].du = Complex64::new(c / g.q(r), 0.0);
        fs
    }

    #[test]
    fn radial_flux_values() {
        let (g, band) = setup();
        let fs = radial_state(&g, band, 2.0, 1.0);
        let e = flux(&fs, MultiplierKind::DR, CommutatorKind::None, Equation::Unknown).unwrap();
        assert!((e - 1.0 / (2.0 * 4.0 * 3.1)).abs() < 1e-15);
        assert!((e - 0.040323).abs() < 1e-6);
        let em = flux(&fs, MultiplierKind::M, CommutatorKind::None, Equation::Unknown).unwrap();
        assert!((em - 0.5).abs() < 1e-15);
        assert_eq!(bulk_current(&fs, MultiplierKind::M), 0.0);
    }

    #[test]
    fn zero_field_is_zero() {
        let (g, band) = setup();
        let fs = FieldState::zeros(&g, band, true, 3.0).unwrap();
        for (m, c) in KINDS {
            assert_eq!(flux(&fs, m, c, Equation::Homogeneous).unwrap(), 0.0);
        }
        assert_eq!(bulk_current(&fs, MultiplierKind::DR), 0.0);
        assert_eq!(sobolev_ratio(&fs), 0.0);
    }

    #[test]
    fn commuted_needs_equation() {
        let (g, band) = setup();
        let fs = radial_state(&g, band, 2.0, 1.0);
        assert_eq!(
            flux(&fs, MultiplierKind::DR, CommutatorKind::Xs, Equation::Unknown),
            Err(Error::MissingSecondDerivative)
        );
    }

    #[test]
    fn xs_middle_coefficient_vanishes() {
        let (g, _) = setup();
        for i in 0..20 {
            let r = 1.3 * (1.0 + i as f64 * 0.7);
            let (v, s) = middle_coefficient(&g, FChoice::Xs, r);
            assert!(v.abs() <= 1e-12 * s, "r={r} v={v} s={s}");
            let (v, s) = middle_coefficient(&g, FChoice::Xw, r);
            assert!(v.abs() <= 1e-12 * s);
        }
    }
}
