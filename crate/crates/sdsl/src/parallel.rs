//! Rayon drivers for the per-mode kernels of the core crate.
//!
//! Work is split by mode and the results are collected in the canonical mode
//! order, so every driver returns bit-identical results for any thread count.

use num_complex::Complex64;
use rayon::prelude::*;

use sdsl_core::asymptotics::build_asymptotic;
use sdsl_core::evolution::{assemble_trajectory, evolve_work_item, mode_trajectory, work_items, SourceTerm};
use sdsl_core::scattering::{
    active_modes, assemble_backward, backward_mode, decay_report_from_profile, extract_asymptotics, relative_h1_error,
    set_with_partner, validate_schedule, DecayReport, RoundTripConfig, RoundTripReport,
};
use sdsl_core::{Error, FieldState, IntegratorConfig, ModeState, Result, ScatteringData, ScatteringResult, SdSGeometry};

/// Homogeneous evolution of `initial` (at `radii[0]`) through `radii`.
pub fn forward_solve(initial: &FieldState, radii: &[f64], cfg: &IntegratorConfig) -> Result<Vec<FieldState>> {
    if radii.first() != Some(&initial.r) {
        return Err(Error::InvalidParameter {
            what: "forward radii[0] (must equal initial.r)",
            value: radii.first().copied().unwrap_or(f64::NAN),
        });
    }
    evolve_trajectory(initial, radii, None, cfg)
}

/// Evolve every mode of `fs` through `radii`.
pub fn evolve_trajectory(
    fs: &FieldState,
    radii: &[f64],
    source: Option<&(dyn SourceTerm + Sync)>,
    cfg: &IntegratorConfig,
) -> Result<Vec<FieldState>> {
    let items = work_items(fs);
    let results = items
        .par_iter()
        .map(|&i| evolve_work_item(fs, i, radii, source.map(|s| s as &dyn SourceTerm), cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_trajectory(fs, &items, results, radii))
}

/// The backward construction with modes solved in parallel.
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
        .into_par_iter()
        .map(|m| backward_mode(&asymp, m, r0, schedule, cfg))
        .collect::<Result<Vec<_>>>()?;
    assemble_backward(&asymp, real, r0, schedule, rems)
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
    let fit_radii = cfg.fit_radii(r_max);
    let mut radii = vec![r0];
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

/// `ψ − ψ_asymp` at the listed radii, from the backward solution started at
/// `r_far` (relative error of order `r/r_far`).
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
    desc.sort_by(|a, b| b.total_cmp(a));
    if desc.is_empty() || !(r_far > desc[0]) {
        return Err(Error::InvalidParameter { what: "r_far", value: r_far });
    }
    let src = asymp.remainder_source();
    let zero = Complex64::new(0.0, 0.0);
    let trajectories = active_modes(&band, real)
        .into_par_iter()
        .map(|mode| {
            let c = asymp.coefficients(mode);
            if c.a0 == zero && c.a3 == zero {
                return Ok(Vec::new());
            }
            let start = ModeState::new(mode, r_far, zero, zero);
            mode_trajectory(geom, &band, &start, &desc, Some(&src as &dyn SourceTerm), cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<FieldState> = radii.iter().map(|&r| FieldState::zeros(geom, band, real, r)).collect::<Result<_>>()?;
    for st in trajectories.into_iter().flatten() {
        for fs in out.iter_mut().filter(|fs| fs.r == st.r) {
            set_with_partner(fs, st);
        }
    }
    Ok(out)
}

/// Pointwise and L² decay of the remainder at `radii`, with the reference
/// backward solution started at `10⁴·max(radii)`.
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

/// Install a global pool with `threads` workers (0 keeps rayon's default).
pub fn init_thread_pool(threads: usize) -> std::result::Result<(), rayon::ThreadPoolBuildError> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()
}
