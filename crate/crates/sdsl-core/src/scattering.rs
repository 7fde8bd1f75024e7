//! Scattering from the future boundary: backward construction of solutions
//! with prescribed `(ψ₀, ψ₃)`, forward extraction of the asymptotic data, and
//! the round trip between the two.
//!
//! The backward solution is `ψ_R = ψ_asymp + ψ_rem^R`, where the remainder has
//! zero data on Σ_R and solves `□ψ_rem = −□ψ_asymp`. Its value on Σ_{r₀}
//! converges like `1/R`; besides the raw per-R fields the construction
//! returns the polynomial extrapolation in `1/R` of the schedule to `R = ∞`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::asymptotics::{build_asymptotic, AsymptoticSolution};
use crate::energy::{flux, resolving_grid, CommutatorKind, Equation, MultiplierKind};
use crate::error::{Error, Result};
use crate::evolution::{evolve_field_trajectory, mode_trajectory, FieldState, IntegratorConfig, ModeState, SourceTerm};
use crate::fit::{extrapolate_to_zero, least_squares};
use crate::geometry::SdSGeometry;
use crate::spectral::{gauss_legendre, synthesize_on_grid, Band, CylinderField, ModeIndex};

/// Free data at the future boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringData {
    pub psi0: CylinderField,
    pub psi3: CylinderField,
}

impl ScatteringData {
    pub fn new(psi0: CylinderField, psi3: CylinderField) -> Result<Self> {
        if psi0.band() != psi3.band() {
            return Err(Error::BandMismatch);
        }
        Ok(ScatteringData { psi0, psi3 })
    }

    pub fn band(&self) -> Band {
        self.psi0.band()
    }

    pub fn is_real(&self) -> bool {
        self.psi0.is_real() && self.psi3.is_real()
    }

    pub fn scaled(&self, a: f64) -> Self {
        ScatteringData { psi0: self.psi0.scaled(a), psi3: self.psi3.scaled(a) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringResult {
    /// The `R → ∞` extrapolation of the per-R fields on Σ_{r₀}.
    pub field_at_r0: FieldState,
    /// `ψ_R` on Σ_{r₀} for every R of the schedule.
    pub per_radius: Vec<FieldState>,
    pub schedule: Vec<f64>,
    /// `‖ψ_{R_{i+1}} − ψ_{R_i}‖_{M,Σ_{r₀}}`.
    pub cauchy_gaps: Vec<f64>,
    /// Log-log slope of the gaps against `R_i`; `None` when all gaps vanish.
    pub rate_fit: Option<f64>,
}

/// The default schedule `{25, 50, 100, 200}·r_c`.
pub fn default_schedule(geom: &SdSGeometry) -> Vec<f64> {
    [25.0, 50.0, 100.0, 200.0].iter().map(|s| s * geom.r_c()).collect()
}

/// Check that `r0` lies in the expanding region and the schedule increases
/// strictly from above `r0`.
pub fn validate_schedule(geom: &SdSGeometry, r0: f64, schedule: &[f64]) -> Result<()> {
    geom.check_radius(r0)?;
    if schedule.is_empty() {
        return Err(Error::InvalidParameter { what: "schedule length", value: 0.0 });
    }
    for w in schedule.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidParameter { what: "schedule (must increase)", value: w[1] });
        }
    }
    if !(schedule[0] > r0) {
        return Err(Error::InvalidParameter { what: "schedule minimum (must exceed r0)", value: schedule[0] });
    }
    Ok(())
}

/// Modes that need an integration for the given field symmetry.
pub fn active_modes(band: &Band, real: bool) -> Vec<ModeIndex> {
    band.modes().filter(|m| !real || m.is_representative()).collect()
}

/// Remainder of one mode at `r0` for each `R` of the schedule: zero data at
/// R, backward integration of `□ψ_rem = −□ψ_asymp`.
pub fn backward_mode(
    asymp: &AsymptoticSolution,
    mode: ModeIndex,
    r0: f64,
    schedule: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<ModeState>> {
    let c = asymp.coefficients(mode);
    let zero = Complex64::new(0.0, 0.0);
    if c.a0 == zero && c.a3 == zero {
        return Ok(schedule.iter().map(|_| ModeState::new(mode, r0, zero, zero)).collect());
    }
    let band = asymp.band();
    let src = asymp.remainder_source();
    schedule
        .iter()
        .map(|&big_r| {
            let start = ModeState::new(mode, big_r, zero, zero);
            let mut t = mode_trajectory(&asymp.geometry, &band, &start, &[r0], Some(&src), cfg)?;
            Ok(t.pop().expect("one radius"))
        })
        .collect()
}

/// Assemble per-mode remainders (ordered as [`active_modes`]) into the result.
pub fn assemble_backward(
    asymp: &AsymptoticSolution,
    real: bool,
    r0: f64,
    schedule: &[f64],
    remainders: Vec<Vec<ModeState>>,
) -> Result<ScatteringResult> {
    let geom = &asymp.geometry;
    let band = asymp.band();
    let modes = active_modes(&band, real);
    let mut per_radius: Vec<FieldState> =
        schedule.iter().map(|_| FieldState::zeros(geom, band, real, r0)).collect::<Result<_>>()?;
    let mut field_at_r0 = FieldState::zeros(geom, band, real, r0)?;
    let xs: Vec<f64> = schedule.iter().map(|r| 1.0 / r).collect();
    for (mode, rems) in modes.iter().zip(remainders) {
        let (ua, dua) = asymp.evaluate(*mode, r0)?;
        let mut us = Vec::with_capacity(schedule.len());
        let mut dus = Vec::with_capacity(schedule.len());
        for (fs, rem) in per_radius.iter_mut().zip(&rems) {
            let st = ModeState::new(*mode, r0, ua + rem.u, dua + rem.du);
            set_with_partner(fs, st);
            us.push(rem.u);
            dus.push(rem.du);
        }
        let ex = |vals: &[Complex64]| {
            let re: Vec<f64> = vals.iter().map(|c| c.re).collect();
            let im: Vec<f64> = vals.iter().map(|c| c.im).collect();
            Complex64::new(extrapolate_to_zero(&xs, &re), extrapolate_to_zero(&xs, &im))
        };
        set_with_partner(&mut field_at_r0, ModeState::new(*mode, r0, ua + ex(&us), dua + ex(&dus)));
    }
    let mut cauchy_gaps = Vec::with_capacity(schedule.len().saturating_sub(1));
    for w in per_radius.windows(2) {
        let d = w[1].linear_combination(1.0, &w[0], -1.0)?;
        cauchy_gaps.push(flux(&d, MultiplierKind::M, CommutatorKind::None, Equation::Unknown)?.sqrt());
    }
    let scale = per_radius
        .last()
        .map(|f| flux(f, MultiplierKind::M, CommutatorKind::None, Equation::Unknown).map(f64::sqrt))
        .transpose()?
        .unwrap_or(0.0);
    let floor = 1e-12 * scale;
    for i in 1..cauchy_gaps.len() {
        if schedule[i - 1] >= 10.0 * geom.r_c() && cauchy_gaps[i - 1] > floor && !(cauchy_gaps[i] < cauchy_gaps[i - 1]) {
            return Err(Error::NonConvergent {
                detail: format!(
                    "Cauchy gaps do not decrease: gap({:.3e}) = {:.3e} after gap({:.3e}) = {:.3e}",
                    schedule[i], cauchy_gaps[i], schedule[i - 1], cauchy_gaps[i - 1]
                ),
            });
        }
    }
    let rate_fit = log_log_slope(&schedule[..cauchy_gaps.len()], &cauchy_gaps);
    Ok(ScatteringResult { field_at_r0, per_radius, schedule: schedule.to_vec(), cauchy_gaps, rate_fit })
}

/// Store a mode state, filling its conjugate partner on real fields.
pub fn set_with_partner(fs: &mut FieldState, st: ModeState) {
    let i = fs.band.index(st.mode).expect("mode in band");
    fs.states[i] = st;
    if fs.real {
        let p = st.mode.partner();
        if p != st.mode {
            let j = fs.band.index(p).expect("partner in band");
            let s = st.mode.parity();
            fs.states[j] = ModeState::new(p, st.r, st.u.conj() * s, st.du.conj() * s);
        }
    }
}

/// Least-squares slope of `log y` against `log x` over the positive entries.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(_, y)| **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Backward construction of the scattering solution on Σ_{r₀}.
pub fn solve_backward(
    data: &ScatteringData,
    geom: &SdSGeometry,
    r0: f64,
    schedule: &[f64],
    cfg: &IntegratorConfig,
) -> Result<ScatteringResult> {
    validate_schedule(geom, r0, schedule)?;
    let asymp = build_asymptotic(&data.psi0, &data.psi3, geom)?;
    let real = data.is_real();
    let rems = active_modes(&data.band(), real)
        .into_iter()
        .map(|m| backward_mode(&asymp, m, r0, schedule, cfg))
        .collect::<Result<Vec<_>>>()?;
    assemble_backward(&asymp, real, r0, schedule, rems)
}

/// `(1/√2)∫_a^b ‖rφ^{1/2}□ψ_asymp‖ dr`, the bound for the Cauchy gap between
/// the backward solutions from `a` and `b`.
pub fn gap_bound(asymp: &AsymptoticSolution, a: f64, b: f64) -> Result<f64> {
    let (x, w) = gauss_legendre(24);
    let pieces = 8;
    let (la, lb) = (a.ln(), b.ln());
    let mut total = 0.0;
    for p in 0..pieces {
        let lo = la + (lb - la) * p as f64 / pieces as f64;
        let hi = la + (lb - la) * (p + 1) as f64 / pieces as f64;
        for (xi, wi) in x.iter().zip(&w) {
            let s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xi;
            let r = s.exp();
            total += 0.5 * (hi - lo) * wi * r * asymp.weighted_norm(r)?;
        }
    }
    Ok(total / core::f64::consts::SQRT_2)
}

/// Homogeneous evolution from `initial` (at `radii[0]`) through `radii`.
pub fn forward_solve(initial: &FieldState, radii: &[f64], cfg: &IntegratorConfig) -> Result<Vec<FieldState>> {
    if radii.first() != Some(&initial.r) {
        return Err(Error::InvalidParameter { what: "forward radii[0] (must equal initial.r)", value: radii.first().copied().unwrap_or(f64::NAN) });
    }
    evolve_field_trajectory(initial, radii, None, cfg)
}

/// Asymptotic data recovered from a forward trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractionResult {
    pub psi0: CylinderField,
    pub psi2: CylinderField,
    pub psi3: CylinderField,
    /// `(Σ|coefficient of r⁻¹|²)^{1/2}`.
    pub spurious_inv_r: f64,
    /// `(Σ|coefficient of r⁻³ log r|²)^{1/2}`.
    pub spurious_log: f64,
    pub fit_radii: Vec<f64>,
    /// Worst condition estimate over the per-mode fits.
    pub condition: f64,
}

/// Largest acceptable scaled condition estimate of an extraction fit.
pub const MAX_FIT_CONDITION: f64 = 1e12;

/// Per-mode fit coefficients `(a₀, a₁, a₂, a₃, b)` of
/// `u ≈ a₀ + a₁/r + a₂/r² + a₃/r³ + b·log r/r³ + Σ_j c_j/r^j (j = 4..=7)`,
/// using the samples `u(r_i)` and `r_i u′(r_i)`.
///
/// The powers `r⁻⁴ … r⁻⁷` are nuisance terms ([`NUISANCE_POWERS`] of them):
/// without them the truncation of the expansion leaks into the `log r/r³`
/// and `r⁻³` coefficients. Rows are weighted by
/// the inverse magnitude of the sample so that small late-time values are fit
/// in relative terms.
pub fn fit_mode(samples: &[(f64, Complex64, Complex64)]) -> Result<([Complex64; 5], f64)> {
    fit_mode_with(samples, NUISANCE_POWERS)
}

/// Number of nuisance powers `r⁻⁴, r⁻⁵, …` used by [`fit_mode`].
pub const NUISANCE_POWERS: usize = 4;

/// [`fit_mode`] with an explicit number of nuisance powers.
pub fn fit_mode_with(samples: &[(f64, Complex64, Complex64)], nuisance: usize) -> Result<([Complex64; 5], f64)> {
    let s = samples[0].0;
    let floor_u = samples.iter().map(|p| p.1.norm()).fold(0.0, f64::max) * 1e-14;
    let floor_d = samples.iter().map(|p| (p.2 * p.0).norm()).fold(0.0, f64::max) * 1e-14;
    let floor = floor_u.max(floor_d).max(f64::MIN_POSITIVE);
    let mut rows = Vec::with_capacity(2 * samples.len());
    let mut b_re = Vec::with_capacity(2 * samples.len());
    let mut b_im = Vec::with_capacity(2 * samples.len());
    for &(r, u, du) in samples {
        let x = r / s;
        let lx = x.ln();
        let p = |k: i32| x.powi(-k);
        let wu = 1.0 / u.norm().max(floor);
        let mut row = vec![1.0, p(1), p(2), p(3), p(3) * lx];
        row.extend((0..nuisance).map(|j| p(4 + j as i32)));
        rows.push(row.iter().map(|v| v * wu).collect::<Vec<f64>>());
        b_re.push(u.re * wu);
        b_im.push(u.im * wu);
        let rd = du * r;
        let wd = 1.0 / rd.norm().max(floor);
        let mut row = vec![0.0, -p(1), -2.0 * p(2), -3.0 * p(3), p(3) * (1.0 - 3.0 * lx)];
        row.extend((0..nuisance).map(|j| -((4 + j) as f64) * p(4 + j as i32)));
        rows.push(row.iter().map(|v| v * wd).collect());
        b_re.push(rd.re * wd);
        b_im.push(rd.im * wd);
    }
    let ls = least_squares(&rows, &[b_re, b_im], MAX_FIT_CONDITION)?;
    let c = |j: usize| Complex64::new(ls.solutions[0][j], ls.solutions[1][j]);
    let ln_s = s.ln();
    let a0 = c(0);
    let a1 = c(1) * s;
    let a2 = c(2) * (s * s);
    let b = c(4) * (s * s * s);
    let a3 = (c(3) - c(4) * ln_s) * (s * s * s);
    Ok(([a0, a1, a2, a3, b], ls.condition))
}

/// Recover `(ψ₀, ψ₂, ψ₃)` and the excluded-term magnitudes from the states of
/// a trajectory sampled at `fit_radii`.
pub fn extract_asymptotics(trajectory: &[FieldState], fit_radii: &[f64]) -> Result<ExtractionResult> {
    if fit_radii.len() < 5 {
        return Err(Error::InvalidParameter { what: "fit radii count (need at least 5)", value: fit_radii.len() as f64 });
    }
    for w in fit_radii.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidParameter { what: "fit radii (must increase)", value: w[1] });
        }
    }
    let snaps: Vec<&FieldState> = fit_radii
        .iter()
        .map(|&r| {
            trajectory
                .iter()
                .find(|fs| (fs.r - r).abs() <= 1e-12 * r)
                .ok_or(Error::InvalidParameter { what: "fit radius not sampled", value: r })
        })
        .collect::<Result<_>>()?;
    let band = snaps[0].band;
    let real = snaps[0].real;
    let mut psi0 = CylinderField::zeros(band, real);
    let mut psi2 = CylinderField::zeros(band, real);
    let mut psi3 = CylinderField::zeros(band, real);
    let (mut s1, mut slog, mut cond) = (0.0, 0.0, 0.0f64);
    for (i, mode) in band.modes().enumerate() {
        if real && !mode.is_representative() {
            continue;
        }
        let samples: Vec<(f64, Complex64, Complex64)> =
            snaps.iter().map(|fs| (fs.r, fs.states[i].u, fs.states[i].du)).collect();
        if samples.iter().all(|p| p.1 == Complex64::new(0.0, 0.0) && p.2 == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let ([a0, a1, a2, a3, b], c) = fit_mode(&samples).map_err(|e| e.for_mode(mode))?;
        cond = cond.max(c);
        psi0.set(mode, a0);
        psi2.set(mode, a2);
        psi3.set(mode, a3);
        let mult = if real && mode.partner() != mode { 2.0 } else { 1.0 };
        s1 += mult * a1.norm_sqr();
        slog += mult * b.norm_sqr();
    }
    Ok(ExtractionResult {
        psi0,
        psi2,
        psi3,
        spurious_inv_r: s1.sqrt(),
        spurious_log: slog.sqrt(),
        fit_radii: fit_radii.to_vec(),
        condition: cond,
    })
}

/// Settings of the round trip beyond the integrator.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundTripConfig {
    pub integrator: IntegratorConfig,
    /// Backward schedule as fractions of `R_max`.
    pub schedule_fractions: Vec<f64>,
    /// Number of geometric fit radii in `[R_max/8, R_max]`.
    pub fit_points: usize,
}

impl RoundTripConfig {
    pub fn new(geom: &SdSGeometry) -> Self {
        RoundTripConfig {
            integrator: IntegratorConfig::new(geom),
            schedule_fractions: vec![0.125, 0.25, 0.5, 1.0],
            fit_points: 12,
        }
    }

    pub fn schedule(&self, r_max: f64) -> Vec<f64> {
        self.schedule_fractions.iter().map(|f| f * r_max).collect()
    }

    pub fn fit_radii(&self, r_max: f64) -> Vec<f64> {
        geometric(r_max / 8.0, r_max, self.fit_points)
    }
}

/// `n` geometrically spaced points from `a` to `b` inclusive.
pub fn geometric(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1).max(1) as f64)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundTripReport {
    /// `‖ψ₀ − ψ₀^rec‖_{H¹}/‖ψ₀‖_{H¹}` (absolute when ψ₀ = 0).
    pub psi0_error: f64,
    pub psi3_error: f64,
    pub backward: ScatteringResult,
    pub extraction: ExtractionResult,
}

/// Relative H¹ error, absolute when the reference vanishes.
pub fn relative_h1_error(reference: &CylinderField, recovered: &CylinderField) -> Result<f64> {
    let diff = recovered.linear_combination(1.0, reference, -1.0)?;
    let n = reference.sobolev_norm(1);
    let d = diff.sobolev_norm(1);
    Ok(if n > 0.0 { d / n } else { d })
}

/// Backward construction followed by forward extraction.
pub fn round_trip(
    data: &ScatteringData,
    geom: &SdSGeometry,
    r0: f64,
    r_max: f64,
    cfg: &RoundTripConfig,
) -> Result<RoundTripReport> {
    let backward = solve_backward(data, geom, r0, &cfg.schedule(r_max), &cfg.integrator)?;
    round_trip_from_backward(data, backward, r_max, cfg)
}

/// The forward half of [`round_trip`], given the backward result.
pub fn round_trip_from_backward(
    data: &ScatteringData,
    backward: ScatteringResult,
    r_max: f64,
    cfg: &RoundTripConfig,
) -> Result<RoundTripReport> {
    let fit_radii = cfg.fit_radii(r_max);
    let mut radii = vec![backward.field_at_r0.r];
    radii.extend_from_slice(&fit_radii);
    let traj = forward_solve(&backward.field_at_r0, &radii, &cfg.integrator)?;
    let extraction = extract_asymptotics(&traj, &fit_radii)?;
    Ok(RoundTripReport {
        psi0_error: relative_h1_error(&data.psi0, &extraction.psi0)?,
        psi3_error: relative_h1_error(&data.psi3, &extraction.psi3)?,
        backward,
        extraction,
    })
}

/// Remainder `ψ − ψ_asymp` of the scattering solution at the listed radii,
/// approximated by the backward solution from `r_far` (whose own error is of
/// relative size `r/r_far`).
pub fn remainder_profile(
    data: &ScatteringData,
    geom: &SdSGeometry,
    radii: &[f64],
    r_far: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<FieldState>> {
    let asymp = build_asymptotic(&data.psi0, &data.psi3, geom)?;
    let real = data.is_real();
    let band = data.band();
    let mut desc: Vec<f64> = radii.to_vec();
    desc.sort_by(|a, b| b.partial_cmp(a).expect("finite radii"));
    if !(r_far > desc[0]) {
        return Err(Error::InvalidParameter { what: "r_far", value: r_far });
    }
    let mut out: Vec<FieldState> = radii.iter().map(|&r| FieldState::zeros(geom, band, real, r)).collect::<Result<_>>()?;
    let src = asymp.remainder_source();
    let zero = Complex64::new(0.0, 0.0);
    for mode in active_modes(&band, real) {
        let c = asymp.coefficients(mode);
        if c.a0 == zero && c.a3 == zero {
            continue;
        }
        let start = ModeState::new(mode, r_far, zero, zero);
        let traj = mode_trajectory(geom, &band, &start, &desc, Some(&src as &dyn SourceTerm), cfg)?;
        for st in traj {
            for fs in out.iter_mut().filter(|fs| fs.r == st.r) {
                set_with_partner(fs, st);
            }
        }
    }
    Ok(out)
}

/// Grid sup-norms and L² norms of the remainder with their log-log slopes.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub radii: Vec<f64>,
    pub sup_defects: Vec<f64>,
    pub sup_slope: Option<f64>,
    /// `‖ψ_rem‖_{L²(Σ_r)}` with the measure `r²φ⁻¹ dt dμ_γ`.
    pub l2_norms: Vec<f64>,
    pub l2_slope: Option<f64>,
}

/// Measure the pointwise and L² decay of `ψ − ψ₀ − ψ₂/r² − ψ₃/r³`.
pub fn pointwise_decay_check(
    data: &ScatteringData,
    geom: &SdSGeometry,
    radii: &[f64],
    cfg: &IntegratorConfig,
) -> Result<DecayReport> {
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let profile = remainder_profile(data, geom, radii, 1e4 * r_max, cfg)?;
    decay_report_from_profile(&profile)
}

/// Decay report for a precomputed remainder profile.
pub fn decay_report_from_profile(profile: &[FieldState]) -> Result<DecayReport> {
    let mut sup_defects = Vec::with_capacity(profile.len());
    let mut l2_norms = Vec::with_capacity(profile.len());
    for fs in profile {
        let (ts, th, ph) = resolving_grid(&fs.band);
        let vals = synthesize_on_grid(&fs.u_field(), &ts, &th, &ph);
        let sup = vals.iter().map(|v| if fs.real { v.re.abs() } else { v.norm() }).fold(0.0, f64::max);
        sup_defects.push(sup);
        let sum: f64 = fs.states.iter().map(|s| s.u.norm_sqr()).sum();
        l2_norms.push((fs.r * fs.r * fs.geometry.delta(fs.r).sqrt() * sum).sqrt());
    }
    let radii: Vec<f64> = profile.iter().map(|f| f.r).collect();
    Ok(DecayReport {
        sup_slope: log_log_slope(&radii, &sup_defects),
        l2_slope: log_log_slope(&radii, &l2_norms),
        radii,
        sup_defects,
        l2_norms,
    })
}
