//! Per-mode radial evolution of the coordinate wave equation.
//!
//! For each mode the equation `□ψ = F` reduces to
//! `(r²Δu′)′ = −(r²ω²/Δ + ℓ(ℓ+1))u − r²F`. It is integrated as a first-order
//! system in the flux variable `P = r²Δu′`:
//!
//! ```text
//! du/dr = P/(r²Δ),          dP/dr = −(r²ω²/Δ + L)u − r²F,
//! ```
//!
//! and, beyond the switch radius, in `ρ = 1/r` with `D(ρ) = ρ²Δ(1/ρ)`:
//!
//! ```text
//! du/dρ = −ρ²P/D,           dP/dρ = ρ⁻²[(ω²/D + L)u + ρ⁻²F].
//! ```
//!
//! Both forms keep `P` exactly constant for the homogeneous `ω = ℓ = 0` mode,
//! and the ρ-form has bounded coefficients up to `ρ = 0`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::SdSGeometry;
use crate::ode::Dopri5;
use crate::spectral::{Band, CylinderField, ModeIndex};

/// Integration variable for the outer part of a radial integration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variable {
    /// Integrate in r throughout.
    Radius,
    /// Switch to ρ = 1/r for r ≥ switch_radius.
    InverseRadius,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub variable: Variable,
    pub switch_radius: f64,
}

impl IntegratorConfig {
    /// Defaults: tolerances 1e−10 / 1e−14, ρ-variable beyond 2·r_c.
    pub fn new(geom: &SdSGeometry) -> Self {
        IntegratorConfig { rel_tol: 1e-10, abs_tol: 1e-14, variable: Variable::InverseRadius, switch_radius: 2.0 * geom.r_c() }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(Error::InvalidParameter { what: "rel_tol", value: self.rel_tol });
        }
        if !(self.abs_tol > 0.0 && self.abs_tol <= 1e-2) {
            return Err(Error::InvalidParameter { what: "abs_tol", value: self.abs_tol });
        }
        if !(self.switch_radius.is_finite() && self.switch_radius > 0.0) {
            return Err(Error::InvalidParameter { what: "switch_radius", value: self.switch_radius });
        }
        Ok(())
    }

    fn stepper(&self) -> Dopri5 {
        Dopri5::new(self.rel_tol, self.abs_tol)
    }
}

/// The two numbers of a mode that enter the radial equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeParams {
    pub omega_sq: f64,
    pub ell_factor: f64,
}

impl ModeParams {
    pub fn new(band: &Band, mode: ModeIndex) -> Self {
        let w = band.omega(mode);
        ModeParams { omega_sq: w * w, ell_factor: mode.ell_factor() }
    }

    pub fn from_omega(omega: f64, ell: u32) -> Self {
        let l = ell as f64;
        ModeParams { omega_sq: omega * omega, ell_factor: l * (l + 1.0) }
    }
}

/// Forcing `F` in `□ψ = F`, supplied mode by mode as a function of r.
pub trait SourceTerm: Sync {
    fn value(&self, mode: ModeIndex, r: f64) -> Complex64;
    /// `∂_r F`; needed by the commuted energies.
    fn derivative(&self, mode: ModeIndex, r: f64) -> Complex64;
}

/// Value and radial derivative of one mode at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeState {
    pub mode: ModeIndex,
    pub r: f64,
    pub u: Complex64,
    pub du: Complex64,
}

impl ModeState {
    pub fn new(mode: ModeIndex, r: f64, u: Complex64, du: Complex64) -> Self {
        ModeState { mode, r, u, du }
    }

    /// The flux variable `P = r²Δu′`.
    pub fn flux_variable(&self, geom: &SdSGeometry) -> Complex64 {
        self.du * geom.q(self.r)
    }
}

/// A whole band-limited field on one level set Σ_r.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub r: f64,
    pub band: Band,
    /// When set, the state satisfies the reality constraint and only
    /// representative modes are evolved.
    pub real: bool,
    pub geometry: SdSGeometry,
    pub states: Vec<ModeState>,
}

impl FieldState {
    pub fn zeros(geom: &SdSGeometry, band: Band, real: bool, r: f64) -> Result<Self> {
        geom.check_radius(r)?;
        let zero = Complex64::new(0.0, 0.0);
        Ok(FieldState {
            r,
            band,
            real,
            geometry: *geom,
            states: band.modes().map(|m| ModeState::new(m, r, zero, zero)).collect(),
        })
    }

    /// Data `(ψ, ∂_rψ)|_{Σ_r}` given as two spectral fields.
    pub fn from_fields(geom: &SdSGeometry, r: f64, u: &CylinderField, du: &CylinderField) -> Result<Self> {
        geom.check_radius(r)?;
        if u.band() != du.band() {
            return Err(Error::BandMismatch);
        }
        let band = u.band();
        Ok(FieldState {
            r,
            band,
            real: u.is_real() && du.is_real(),
            geometry: *geom,
            states: band.modes().map(|m| ModeState::new(m, r, u.get(m), du.get(m))).collect(),
        })
    }

    pub fn get(&self, mode: ModeIndex) -> Option<&ModeState> {
        self.band.index(mode).map(|i| &self.states[i])
    }

    pub fn u_field(&self) -> CylinderField {
        let c = self.states.iter().map(|s| s.u).collect();
        CylinderField::from_coeffs(self.band, self.real, c).expect("state length matches band")
    }

    pub fn du_field(&self) -> CylinderField {
        let c = self.states.iter().map(|s| s.du).collect();
        CylinderField::from_coeffs(self.band, self.real, c).expect("state length matches band")
    }

    pub fn params(&self, mode: ModeIndex) -> ModeParams {
        ModeParams::new(&self.band, mode)
    }

    /// `a·self + b·other`, both at the same radius and band.
    pub fn linear_combination(&self, a: f64, other: &FieldState, b: f64) -> Result<FieldState> {
        if self.band != other.band || self.r != other.r {
            return Err(Error::BandMismatch);
        }
        let mut out = self.clone();
        out.real = self.real && other.real;
        for (s, o) in out.states.iter_mut().zip(&other.states) {
            s.u = s.u * a + o.u * b;
            s.du = s.du * a + o.du * b;
        }
        Ok(out)
    }

    /// Largest |u| and |du| over modes.
    pub fn max_abs(&self) -> (f64, f64) {
        self.states.iter().fold((0.0f64, 0.0f64), |(a, b), s| (a.max(s.u.norm()), b.max(s.du.norm())))
    }
}

/// Right-hand side of the first-order system in `(u, u′)`:
/// `u″ = [−Q′u′ − (r²ω²/Δ + L)u − r²F]/Q` with `Q = r²Δ`.
pub fn ode_rhs(
    geom: &SdSGeometry,
    params: ModeParams,
    r: f64,
    u: Complex64,
    du: Complex64,
    source: Complex64,
) -> Result<(Complex64, Complex64)> {
    geom.check_radius(r)?;
    let delta = geom.delta(r);
    let q = geom.q(r);
    let r2 = r * r;
    let ddu = (-du * geom.q_prime(r) - u * (r2 * params.omega_sq / delta + params.ell_factor) - source * r2) / q;
    Ok((du, ddu))
}

/// Integrate one mode in flux form from `(r0, u, P)` to `r1`.
///
/// `source` is the mode's forcing as a function of r.
pub fn evolve_flux(
    geom: &SdSGeometry,
    params: ModeParams,
    r0: f64,
    u: Complex64,
    p: Complex64,
    r1: f64,
    source: Option<&dyn Fn(f64) -> Complex64>,
    cfg: &IntegratorConfig,
) -> Result<(Complex64, Complex64)> {
    geom.check_radius(r0)?;
    geom.check_radius(r1)?;
    cfg.validate()?;
    let zero = Complex64::new(0.0, 0.0);
    if source.is_none() && u == zero && p == zero {
        return Ok((zero, zero));
    }
    let mut y = [u.re, u.im, p.re, p.im];
    let switch = match cfg.variable {
        Variable::Radius => f64::INFINITY,
        Variable::InverseRadius => cfg.switch_radius,
    };
    // Split the path at the switch radius; each piece uses one variable.
    let mut pieces: [(f64, f64); 2] = [(r0, r1), (r1, r1)];
    if (r0 - switch) * (r1 - switch) < 0.0 {
        pieces = [(r0, switch), (switch, r1)];
    }
    let stepper = cfg.stepper();
    for &(a, b) in &pieces {
        if a == b {
            continue;
        }
        let outer = a.min(b) >= switch;
        if outer {
            let rhs = |rho: f64, y: &[f64], d: &mut [f64]| {
                let dd = geom.d_of_rho(rho);
                let uu = Complex64::new(y[0], y[1]);
                let pp = Complex64::new(y[2], y[3]);
                let f = source.map_or(zero, |s| s(1.0 / rho));
                let ir2 = 1.0 / (rho * rho);
                let du = -pp * (rho * rho / dd);
                let dp = (uu * (params.omega_sq / dd + params.ell_factor) + f * ir2) * ir2;
                d[0] = du.re;
                d[1] = du.im;
                d[2] = dp.re;
                d[3] = dp.im;
            };
            stepper.integrate(rhs, 1.0 / a, &mut y, 1.0 / b)?;
        } else {
            let rhs = |r: f64, y: &[f64], d: &mut [f64]| {
                let delta = geom.delta(r);
                let r2 = r * r;
                let uu = Complex64::new(y[0], y[1]);
                let pp = Complex64::new(y[2], y[3]);
                let f = source.map_or(zero, |s| s(r));
                let du = pp / (r2 * delta);
                let dp = -uu * (r2 * params.omega_sq / delta + params.ell_factor) - f * r2;
                d[0] = du.re;
                d[1] = du.im;
                d[2] = dp.re;
                d[3] = dp.im;
            };
            stepper.integrate(rhs, a, &mut y, b)?;
        }
    }
    Ok((Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])))
}

/// Evolve one mode from its state to `r_target`.
pub fn evolve(
    geom: &SdSGeometry,
    band: &Band,
    state: &ModeState,
    r_target: f64,
    source: Option<&dyn SourceTerm>,
    cfg: &IntegratorConfig,
) -> Result<ModeState> {
    let mut out = mode_trajectory(geom, band, state, &[r_target], source, cfg)?;
    Ok(out.pop().expect("one radius requested"))
}

/// Evolve one mode through the listed radii in order, recording each state.
pub fn mode_trajectory(
    geom: &SdSGeometry,
    band: &Band,
    state: &ModeState,
    radii: &[f64],
    source: Option<&dyn SourceTerm>,
    cfg: &IntegratorConfig,
) -> Result<Vec<ModeState>> {
    let mode = state.mode;
    let run = || -> Result<Vec<ModeState>> {
        geom.check_radius(state.r)?;
        let params = ModeParams::new(band, mode);
        let src_fn = source.map(|s| move |r: f64| s.value(mode, r));
        let src_ref: Option<&dyn Fn(f64) -> Complex64> = src_fn.as_ref().map(|f| f as &dyn Fn(f64) -> Complex64);
        let mut r = state.r;
        let mut u = state.u;
        let mut p = state.flux_variable(geom);
        let mut out = Vec::with_capacity(radii.len());
        for &target in radii {
            let (nu, np) = evolve_flux(geom, params, r, u, p, target, src_ref, cfg)?;
            r = target;
            u = nu;
            p = np;
            out.push(ModeState::new(mode, r, u, p / geom.q(r)));
        }
        Ok(out)
    };
    run().map_err(|e| e.for_mode(mode))
}

/// Indices of the modes that must actually be integrated for `fs`.
pub fn work_items(fs: &FieldState) -> Vec<usize> {
    (0..fs.states.len()).filter(|&i| !fs.real || fs.states[i].mode.is_representative()).collect()
}

/// Integrate the mode at index `item` of `fs` through `radii`.
pub fn evolve_work_item(
    fs: &FieldState,
    item: usize,
    radii: &[f64],
    source: Option<&dyn SourceTerm>,
    cfg: &IntegratorConfig,
) -> Result<Vec<ModeState>> {
    mode_trajectory(&fs.geometry, &fs.band, &fs.states[item], radii, source, cfg)
}

/// Assemble per-item trajectories (same order as [`work_items`]) into field
/// snapshots, filling conjugate partners for real fields.
pub fn assemble_trajectory(fs: &FieldState, items: &[usize], results: Vec<Vec<ModeState>>, radii: &[f64]) -> Vec<FieldState> {
    let mut snaps: Vec<FieldState> = radii
        .iter()
        .map(|&r| {
            let mut s = fs.clone();
            s.r = r;
            for st in s.states.iter_mut() {
                st.r = r;
            }
            s
        })
        .collect();
    for (&item, traj) in items.iter().zip(results) {
        for (snap, st) in snaps.iter_mut().zip(traj) {
            snap.states[item] = st;
            if fs.real {
                let partner = st.mode.partner();
                if partner != st.mode {
                    let j = fs.band.index(partner).expect("partner in band");
                    let s = st.mode.parity();
                    snap.states[j] = ModeState::new(partner, st.r, st.u.conj() * s, st.du.conj() * s);
                }
            }
        }
    }
    snaps
}

/// Evolve every mode of a field through the listed radii (serially).
pub fn evolve_field_trajectory(
    fs: &FieldState,
    radii: &[f64],
    source: Option<&dyn SourceTerm>,
    cfg: &IntegratorConfig,
) -> Result<Vec<FieldState>> {
    let items = work_items(fs);
    let results = items.iter().map(|&i| evolve_work_item(fs, i, radii, source, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(assemble_trajectory(fs, &items, results, radii))
}

/// Evolve every mode of a field to `r_target`.
pub fn evolve_field(
    fs: &FieldState,
    r_target: f64,
    source: Option<&dyn SourceTerm>,
    cfg: &IntegratorConfig,
) -> Result<FieldState> {
    Ok(evolve_field_trajectory(fs, &[r_target], source, cfg)?.pop().expect("one radius requested"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> SdSGeometry {
        SdSGeometry::new(3.0, 0.1).unwrap()
    }

    #[test]
    fn rhs_reference_value() {
        let g = geom();
        let p = ModeParams::from_omega(1.0, 1);
        let (_, ddu) = ode_rhs(&g, p, 2.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let expected = (1.0 / 12.4) * (4.0 * (-1.0 / 3.1) - 2.0);
        assert!((ddu.re - expected).abs() < 1e-15 && ddu.im == 0.0);
    }

    #[test]
    fn rhs_rejects_inside_horizon() {
        let g = geom();
        let p = ModeParams::from_omega(0.0, 0);
        let z = Complex64::new(0.0, 0.0);
        assert!(matches!(ode_rhs(&g, p, 0.5, z, z, z), Err(Error::OutsideExpandingRegion { .. })));
    }

    #[test]
    fn constant_mode_is_exact() {
        let g = geom();
        let cfg = IntegratorConfig::new(&g);
        let p = ModeParams::from_omega(0.0, 0);
        let (u, pp) = evolve_flux(&g, p, 2.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), 1e4, None, &cfg).unwrap();
        assert_eq!(u, Complex64::new(1.0, 0.0));
        assert_eq!(pp, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn radius_only_and_switched_agree() {
        let g = geom();
        let p = ModeParams::from_omega(2.0, 2);
        let a = IntegratorConfig::new(&g).with_tolerances(1e-12, 1e-15);
        let b = IntegratorConfig { variable: Variable::Radius, ..a };
        let u0 = Complex64::new(0.3, -0.1);
        let p0 = Complex64::new(-0.2, 0.4);
        let (ua, pa) = evolve_flux(&g, p, 1.5, u0, p0, 20.0, None, &a).unwrap();
        let (ub, pb) = evolve_flux(&g, p, 1.5, u0, p0, 20.0, None, &b).unwrap();
        assert!((ua - ub).norm() < 1e-9 * ua.norm().max(1.0));
        assert!((pa - pb).norm() < 1e-9 * pa.norm().max(1.0));
    }
}
