//! The seven commands. Each one builds all of its output files in memory and
//! returns them together with the list of verdicts; nothing touches the disk
//! here, so a failed run leaves no partial files behind.

use num_complex::Complex64;
use serde::Serialize;

use sdsl_core::asymptotics::build_asymptotic;
use sdsl_core::conformal::{
    conformal_residual_order, de_sitter, default_rho_samples, sds_in_rho, synthetic_g1, weighted_backward_check,
};
use sdsl_core::energy::{monotonicity_report, sobolev_ratio, sobolev_ratio_bound};
use sdsl_core::scattering::{extract_asymptotics, gap_bound, geometric, log_log_slope};
use sdsl_core::{
    build_asymptotic_conformal, Band, ClassTag, CylinderField, FieldState, MetricModel, ModeIndex, ScatteringData,
    SdSGeometry,
};

use crate::config::{DataKind, ModelChoice, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{field_to_json, ledger_to_csv, read_field, read_model, states_to_csv, to_json_bytes, FieldFile, ModelFile, Outputs};
use crate::parallel;
use crate::random::{random_field, rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Geometry,
    Forward,
    Backward,
    RoundTrip,
    EnergyReport,
    ResidualScan,
    Perturbed,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Geometry => "geometry",
            Command::Forward => "forward",
            Command::Backward => "backward",
            Command::RoundTrip => "roundtrip",
            Command::EnergyReport => "energy-report",
            Command::ResidualScan => "residual-scan",
            Command::Perturbed => "perturbed",
        }
    }
}

/// One named pass/fail check of a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Verdict { name: name.to_string(), pass, detail }
    }
}

/// Everything a command produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub outputs: Outputs,
    pub verdicts: Vec<Verdict>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Validate the configuration and run one command.
pub fn run(command: Command, cfg: &RunConfig) -> CliResult<Outcome> {
    cfg.validate()?;
    match command {
        Command::Geometry => geometry(cfg),
        Command::Forward => forward(cfg),
        Command::Backward => backward(cfg),
        Command::RoundTrip => roundtrip(cfg),
        Command::EnergyReport => energy_report(cfg),
        Command::ResidualScan => residual_scan(cfg),
        Command::Perturbed => perturbed(cfg),
    }
}

/// The two fields described by the `data` block.
pub fn data_fields(cfg: &RunConfig, band: Band) -> CliResult<(CylinderField, CylinderField)> {
    let d = &cfg.data;
    let single = |mode: ModeIndex| CylinderField::single_mode(band, true, mode, Complex64::new(d.amplitude, 0.0));
    let zero = CylinderField::zeros(band, true);
    let pick = |on: bool, f: CylinderField| if on { f } else { CylinderField::zeros(band, true) };
    Ok(match d.kind {
        DataKind::Zero => (zero.clone(), zero),
        DataKind::Constant => (pick(d.first, single(ModeIndex::new(0, 0, 0))), zero),
        DataKind::SingleMode => {
            let [k, ell, em] = d.mode.expect("validated");
            let m = ModeIndex::new(k, ell as u32, em);
            (pick(d.first, single(m)), pick(d.second, single(m)))
        }
        DataKind::Random => {
            let mut g = rng(cfg.seed);
            let a = random_field(&mut g, band, d.decay);
            let b = random_field(&mut g, band, d.decay);
            (pick(d.first, a), pick(d.second, b))
        }
        DataKind::Files => {
            let read = |p: &std::path::Path| -> CliResult<CylinderField> {
                let f = read_field(p)?;
                if f.band() != band {
                    return Err(CliError::Format {
                        path: p.to_path_buf(),
                        detail: "field band differs from the configured band".to_string(),
                    });
                }
                Ok(f)
            };
            let a = read(d.first_path.as_deref().expect("validated"))?;
            let b = read(d.second_path.as_deref().expect("validated"))?;
            (a, b)
        }
    })
}

fn scattering_data(cfg: &RunConfig, band: Band) -> CliResult<ScatteringData> {
    let (psi0, psi3) = data_fields(cfg, band)?;
    ScatteringData::new(psi0, psi3).map_err(CliError::core("scattering"))
}

fn cauchy_data(cfg: &RunConfig, geom: &SdSGeometry, band: Band) -> CliResult<FieldState> {
    let (u, du) = data_fields(cfg, band)?;
    FieldState::from_fields(geom, cfg.r0(geom), &u, &du).map_err(CliError::core("mode_evolution"))
}

fn finish<T: Serialize>(mut outputs: Outputs, report_name: &str, report: &T, verdicts: Vec<Verdict>) -> Outcome {
    #[derive(Serialize)]
    struct Wrapped<'a, T> {
        #[serde(flatten)]
        report: &'a T,
        verdicts: &'a [Verdict],
        pass: bool,
    }
    let pass = verdicts.iter().all(|v| v.pass);
    outputs.files.insert(0, (report_name.to_string(), to_json_bytes(&Wrapped { report, verdicts: &verdicts, pass })));
    Outcome { outputs, verdicts }
}

#[derive(Serialize)]
struct GeometryResiduals {
    root_h: f64,
    root_c: f64,
    root_bar: f64,
    vieta_sum: f64,
    vieta_pairs: f64,
    vieta_product: f64,
    kappa_vs_delta_prime: f64,
    alpha_sum: f64,
}

#[derive(Serialize)]
struct GeometryReport {
    lambda: f64,
    mass: f64,
    r_h: f64,
    r_c: f64,
    r_bar: f64,
    kappa_c: f64,
    alpha_h: f64,
    alpha_bar_c: f64,
    residuals: GeometryResiduals,
}

fn geometry(cfg: &RunConfig) -> CliResult<Outcome> {
    let g = cfg.sds()?;
    let (lambda, mass) = (g.lambda(), g.mass());
    let (a_h, a_c) = g.kruskal_exponents();
    let roots = [g.r_h(), g.r_c(), g.r_bar()];
    let scale = roots.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let res = GeometryResiduals {
        root_h: g.cubic(g.r_h()).abs(),
        root_c: g.cubic(g.r_c()).abs(),
        root_bar: g.cubic(g.r_bar()).abs(),
        vieta_sum: roots.iter().sum::<f64>().abs() / scale,
        vieta_pairs: ((roots[0] * roots[1] + roots[1] * roots[2] + roots[0] * roots[2]) * lambda / 3.0 + 1.0).abs(),
        vieta_product: (roots[0] * roots[1] * roots[2] * lambda / (6.0 * mass) + 1.0).abs(),
        kappa_vs_delta_prime: (g.surface_gravity() - 0.5 * g.delta_prime(g.r_c()).abs()).abs(),
        alpha_sum: (a_h + a_c - 1.0).abs(),
    };
    let verdicts = vec![
        Verdict::new(
            "root_residuals",
            res.root_h.max(res.root_c).max(res.root_bar) < 1e-12,
            format!("max |cubic(root)| = {:e}", res.root_h.max(res.root_c).max(res.root_bar)),
        ),
        Verdict::new(
            "vieta",
            res.vieta_sum.max(res.vieta_pairs).max(res.vieta_product) < 1e-11,
            format!("max relative Vieta defect = {:e}", res.vieta_sum.max(res.vieta_pairs).max(res.vieta_product)),
        ),
        Verdict::new("surface_gravity", res.kappa_vs_delta_prime < 1e-12, format!("{:e}", res.kappa_vs_delta_prime)),
        Verdict::new("exponent_sum", res.alpha_sum < 1e-12, format!("{:e}", res.alpha_sum)),
    ];
    let report = GeometryReport {
        lambda,
        mass,
        r_h: g.r_h(),
        r_c: g.r_c(),
        r_bar: g.r_bar(),
        kappa_c: g.surface_gravity(),
        alpha_h: a_h,
        alpha_bar_c: a_c,
        residuals: res,
    };
    Ok(finish(Outputs::default(), "geometry.json", &report, verdicts))
}

fn merged_radii(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

#[derive(Serialize)]
struct ExtractionReport {
    r0: f64,
    fit_radii: Vec<f64>,
    condition: f64,
    spurious_inv_r: f64,
    spurious_log: f64,
    psi0_l2: f64,
    spurious_inv_r_relative: f64,
    dr_non_increasing: bool,
    m_non_decreasing: bool,
    psi0: FieldFile,
    psi2: FieldFile,
    psi3: FieldFile,
}

fn forward(cfg: &RunConfig) -> CliResult<Outcome> {
    let geom = cfg.sds()?;
    let band = cfg.band()?;
    let icfg = cfg.integrator(&geom);
    let initial = cauchy_data(cfg, &geom, band)?;
    let r0 = initial.r;
    let r_max = cfg.forward_r_max(&geom);
    let fit_radii = cfg.fit_radii(&geom, r_max);
    let samples = geometric(r0, r_max, cfg.forward.samples);
    let radii = merged_radii(&samples, &fit_radii);
    let traj = parallel::forward_solve(&initial, &radii, &icfg).map_err(CliError::core("mode_evolution"))?;
    let fit_traj: Vec<FieldState> = traj.iter().filter(|fs| fit_radii.contains(&fs.r)).cloned().collect();
    let ex = extract_asymptotics(&fit_traj, &fit_radii).map_err(CliError::core("scattering"))?;
    let sample_traj: Vec<FieldState> = traj.iter().filter(|fs| samples.contains(&fs.r)).cloned().collect();
    let mono = monotonicity_report(&sample_traj, 10.0 * icfg.rel_tol).map_err(CliError::core("energy"))?;
    let psi0_l2 = ex.psi0.sobolev_norm(0);
    let rel = if psi0_l2 > 0.0 { ex.spurious_inv_r / psi0_l2 } else { ex.spurious_inv_r };
    let threshold = cfg.forward.spurious_threshold;
    let verdicts = vec![
        Verdict::new("dr_non_increasing", mono.dr_non_increasing, "flux(DR) along the samples".to_string()),
        Verdict::new("m_non_decreasing", mono.m_non_decreasing, "flux(M) along the samples".to_string()),
        Verdict::new("spurious_inv_r", rel <= threshold, format!("relative r^-1 coefficient {rel:e} (threshold {threshold:e})")),
    ];
    let report = ExtractionReport {
        r0,
        fit_radii: ex.fit_radii.clone(),
        condition: ex.condition,
        spurious_inv_r: ex.spurious_inv_r,
        spurious_log: ex.spurious_log,
        psi0_l2,
        spurious_inv_r_relative: rel,
        dr_non_increasing: mono.dr_non_increasing,
        m_non_decreasing: mono.m_non_decreasing,
        psi0: FieldFile::from_field(&ex.psi0),
        psi2: FieldFile::from_field(&ex.psi2),
        psi3: FieldFile::from_field(&ex.psi3),
    };
    let mut out = Outputs::default();
    out.add("trajectory.csv", states_to_csv(&traj));
    out.add("ledger.csv", ledger_to_csv(&mono.ledger));
    out.add("psi0.json", field_to_json(&ex.psi0));
    out.add("psi3.json", field_to_json(&ex.psi3));
    Ok(finish(out, "extraction.json", &report, verdicts))
}

#[derive(Serialize)]
struct BackwardReport {
    r0: f64,
    schedule: Vec<f64>,
    gaps: Vec<f64>,
    gap_bounds: Vec<f64>,
    rate_fit: Option<f64>,
    flux_m_at_r0: f64,
}

fn backward(cfg: &RunConfig) -> CliResult<Outcome> {
    let geom = cfg.sds()?;
    let band = cfg.band()?;
    let data = scattering_data(cfg, band)?;
    let r0 = cfg.r0(&geom);
    let schedule = cfg.schedule(&geom);
    let res = parallel::solve_backward(&data, &geom, r0, &schedule, &cfg.integrator(&geom))
        .map_err(CliError::core("scattering"))?;
    let asymp = build_asymptotic(&data.psi0, &data.psi3, &geom).map_err(CliError::core("asymptotics"))?;
    let gap_bounds = schedule
        .windows(2)
        .map(|w| gap_bound(&asymp, w[0], w[1]))
        .collect::<sdsl_core::Result<Vec<_>>>()
        .map_err(CliError::core("asymptotics"))?;
    let worst = res.cauchy_gaps.iter().zip(&gap_bounds).map(|(g, b)| if *g == 0.0 { 0.0 } else { g / b }).fold(0.0, f64::max);
    let flux_m = sdsl_core::energy::flux(
        &res.field_at_r0,
        sdsl_core::energy::MultiplierKind::M,
        sdsl_core::energy::CommutatorKind::None,
        sdsl_core::energy::Equation::Unknown,
    )
    .map_err(CliError::core("energy"))?;
    let verdicts = vec![Verdict::new("gaps_within_bound", worst <= 2.0, format!("max gap / tail bound = {worst:.4}"))];
    let report = BackwardReport { r0, schedule, gaps: res.cauchy_gaps.clone(), gap_bounds, rate_fit: res.rate_fit, flux_m_at_r0: flux_m };
    let mut out = Outputs::default();
    out.add("state_r0.csv", states_to_csv(std::slice::from_ref(&res.field_at_r0)));
    Ok(finish(out, "backward.json", &report, verdicts))
}

#[derive(Serialize)]
struct RoundTripErrors {
    psi0: f64,
    psi3: f64,
}

#[derive(Serialize)]
struct RoundTripJson {
    r0: f64,
    r_max: f64,
    schedule: Vec<f64>,
    gaps: Vec<f64>,
    rate_fit: Option<f64>,
    roundtrip_errors: RoundTripErrors,
    spurious_inv_r: f64,
    spurious_log: f64,
    fit_condition: f64,
    decay_slopes: Option<DecaySlopes>,
}

#[derive(Serialize)]
struct DecaySlopes {
    sup: Option<f64>,
    l2: Option<f64>,
}

fn roundtrip(cfg: &RunConfig) -> CliResult<Outcome> {
    let geom = cfg.sds()?;
    let band = cfg.band()?;
    let data = scattering_data(cfg, band)?;
    let r0 = cfg.r0(&geom);
    let r_max = cfg.roundtrip_r_max(&geom);
    let rt_cfg = cfg.round_trip(&geom);
    let rep = parallel::round_trip(&data, &geom, r0, r_max, &rt_cfg).map_err(CliError::core("scattering"))?;
    let tol = cfg.roundtrip.tolerance;
    let verdicts = vec![
        Verdict::new("psi0_recovered", rep.psi0_error < tol, format!("relative H1 error {:e}", rep.psi0_error)),
        Verdict::new("psi3_recovered", rep.psi3_error < tol, format!("relative H1 error {:e}", rep.psi3_error)),
    ];
    let report = RoundTripJson {
        r0,
        r_max,
        schedule: rep.backward.schedule.clone(),
        gaps: rep.backward.cauchy_gaps.clone(),
        rate_fit: rep.backward.rate_fit,
        roundtrip_errors: RoundTripErrors { psi0: rep.psi0_error, psi3: rep.psi3_error },
        spurious_inv_r: rep.extraction.spurious_inv_r,
        spurious_log: rep.extraction.spurious_log,
        fit_condition: rep.extraction.condition,
        decay_slopes: None,
    };
    let mut out = Outputs::default();
    out.add("recovered_psi0.json", field_to_json(&rep.extraction.psi0));
    out.add("recovered_psi3.json", field_to_json(&rep.extraction.psi3));
    Ok(finish(out, "roundtrip.json", &report, verdicts))
}

#[derive(Serialize)]
struct EnergyJson {
    radii: Vec<f64>,
    dr_non_increasing: bool,
    m_non_decreasing: bool,
    xs_ratio_sup: f64,
    xw_ratio_sup: f64,
    yxs_ratio_sup: f64,
    sobolev_ratios: Vec<f64>,
    sobolev_bounds: Vec<f64>,
}

fn energy_report(cfg: &RunConfig) -> CliResult<Outcome> {
    let geom = cfg.sds()?;
    let band = cfg.band()?;
    let icfg = cfg.integrator(&geom);
    let initial = cauchy_data(cfg, &geom, band)?;
    let radii = geometric(initial.r, cfg.forward_r_max(&geom), cfg.forward.samples);
    let traj = parallel::forward_solve(&initial, &radii, &icfg).map_err(CliError::core("mode_evolution"))?;
    let mono = monotonicity_report(&traj, 10.0 * icfg.rel_tol).map_err(CliError::core("energy"))?;
    let sobolev_ratios: Vec<f64> = traj.iter().map(sobolev_ratio).collect();
    let sobolev_bounds: Vec<f64> = radii.iter().map(|&r| sobolev_ratio_bound(&band, &geom, r)).collect();
    let sob_ok = sobolev_ratios.iter().zip(&sobolev_bounds).all(|(q, b)| q <= b);
    let verdicts = vec![
        Verdict::new("dr_non_increasing", mono.dr_non_increasing, "flux(DR) along the trajectory".to_string()),
        Verdict::new("m_non_decreasing", mono.m_non_decreasing, "flux(M) along the trajectory".to_string()),
        Verdict::new("sobolev_ratio_bounded", sob_ok, "sup ratio below the band-dependent constant".to_string()),
    ];
    let report = EnergyJson {
        radii,
        dr_non_increasing: mono.dr_non_increasing,
        m_non_decreasing: mono.m_non_decreasing,
        xs_ratio_sup: mono.xs_ratio_sup,
        xw_ratio_sup: mono.xw_ratio_sup,
        yxs_ratio_sup: mono.yxs_ratio_sup,
        sobolev_ratios,
        sobolev_bounds,
    };
    let mut out = Outputs::default();
    out.add("ledger.csv", ledger_to_csv(&mono.ledger));
    Ok(finish(out, "energy.json", &report, verdicts))
}

#[derive(Serialize)]
struct ResidualJson {
    residual_radii: Vec<f64>,
    weighted_residual: Vec<f64>,
    residual_slope: Option<f64>,
    decay_radii: Vec<f64>,
    sup_defects: Vec<f64>,
    l2_norms: Vec<f64>,
    decay_slopes: DecaySlopes,
}

fn slope_at_most(name: &str, slope: Option<f64>, bound: f64) -> Verdict {
    match slope {
        Some(s) => Verdict::new(name, s <= bound, format!("slope {s:.4} (bound {bound})")),
        None => Verdict::new(name, true, "quantity vanishes identically".to_string()),
    }
}

fn residual_scan(cfg: &RunConfig) -> CliResult<Outcome> {
    let geom = cfg.sds()?;
    let band = cfg.band()?;
    let data = scattering_data(cfg, band)?;
    let asymp = build_asymptotic(&data.psi0, &data.psi3, &geom).map_err(CliError::core("asymptotics"))?;
    let residual_radii = cfg.residual_radii(&geom);
    let weighted = residual_radii
        .iter()
        .map(|&r| asymp.weighted_norm(r))
        .collect::<sdsl_core::Result<Vec<_>>>()
        .map_err(CliError::core("asymptotics"))?;
    let residual_slope = log_log_slope(&residual_radii, &weighted);
    let decay = parallel::pointwise_decay_check(&data, &geom, &cfg.decay_radii(&geom), &cfg.integrator(&geom))
        .map_err(CliError::core("scattering"))?;
    let verdicts = vec![
        slope_at_most("residual_order", residual_slope, -2.0 + 0.05),
        slope_at_most("pointwise_decay", decay.sup_slope, -4.0 + 0.2),
        slope_at_most("l2_decay", decay.l2_slope, -2.5 + 0.2),
    ];
    let report = ResidualJson {
        residual_radii,
        weighted_residual: weighted,
        residual_slope,
        decay_radii: decay.radii,
        sup_defects: decay.sup_defects,
        l2_norms: decay.l2_norms,
        decay_slopes: DecaySlopes { sup: decay.sup_slope, l2: decay.l2_slope },
    };
    Ok(finish(Outputs::default(), "residual.json", &report, verdicts))
}

fn tag_name(t: ClassTag) -> &'static str {
    match t {
        ClassTag::G1 => "G1",
        ClassTag::G2 => "G2",
    }
}

#[derive(Serialize)]
struct ResidualOrderJson {
    rho: Vec<f64>,
    sup_residual: Vec<f64>,
    slope: Option<f64>,
    slope_log_factored: Option<f64>,
    misfit_without_log: f64,
    misfit_with_log: f64,
    log_detected: bool,
}

#[derive(Serialize)]
struct WeightedJson {
    rho0: f64,
    schedule: Vec<f64>,
    gaps: Vec<f64>,
    rate_fit: Option<f64>,
}

#[derive(Serialize)]
struct PerturbedJson {
    model: ModelFile,
    detected_class: &'static str,
    psi0_l2: f64,
    psi31_l2: f64,
    log_term: bool,
    residual: ResidualOrderJson,
    weighted_backward: WeightedJson,
    cross_check_max_relative: Option<f64>,
}

/// The conformal model selected by the `perturbed` block.
pub fn perturbed_model(cfg: &RunConfig, geom: &SdSGeometry) -> CliResult<MetricModel> {
    let lambda = geom.lambda();
    match cfg.perturbed.model {
        ModelChoice::Sds => Ok(sds_in_rho(geom)),
        ModelChoice::DeSitter => de_sitter(lambda).map_err(CliError::core("conformal")),
        ModelChoice::SyntheticG1 => synthetic_g1(lambda, cfg.perturbed.epsilon).map_err(CliError::core("conformal")),
        ModelChoice::File => read_model(cfg.perturbed.model_path.as_deref().expect("validated")),
    }
}

fn perturbed(cfg: &RunConfig) -> CliResult<Outcome> {
    let geom = cfg.sds()?;
    let band = cfg.band()?;
    let model = perturbed_model(cfg, &geom)?;
    let data = scattering_data(cfg, band)?;
    let conformal = CliError::core("conformal");
    let asymp = build_asymptotic_conformal(&data.psi0, &data.psi3, &model).map_err(conformal)?;
    let rho = cfg.perturbed.rho_samples.clone().unwrap_or_else(default_rho_samples);
    let order = conformal_residual_order(&asymp, &rho).map_err(CliError::core("conformal"))?;
    let r0 = cfg.r0(&geom);
    let schedule = cfg.schedule(&geom);
    let wb = weighted_backward_check(&model, &data, 1.0 / r0, &schedule, cfg.integrator.rel_tol)
        .map_err(CliError::core("conformal"))?;

    let psi0_l2 = data.psi0.sobolev_norm(0);
    let psi31_l2 = asymp.psi31.sobolev_norm(0);
    let log_term = psi31_l2 > 1e-12 * psi0_l2.max(f64::MIN_POSITIVE);
    let detected = model.detect_class(1e-12);
    let mut verdicts = vec![
        Verdict::new(
            "class_consistent",
            model.class_tag == ClassTag::G1 || (detected == ClassTag::G2 && !log_term),
            format!("tag {}, detected {}, psi31 L2 {psi31_l2:e}", tag_name(model.class_tag), tag_name(detected)),
        ),
        Verdict::new(
            "log_detection_consistent",
            log_term == order.log_detected(),
            format!("psi31 present: {log_term}, residual fit prefers a log term: {}", order.log_detected()),
        ),
        match order.slope_log_factored {
            Some(s) => Verdict::new("residual_order", s >= 2.0 - 0.05, format!("factored slope {s:.4}")),
            None => Verdict::new("residual_order", true, "residual vanishes identically".to_string()),
        },
    ];

    let cross = if let sdsl_core::conformal::ModelKind::SdS { mass } = model.kind {
        if mass > 0.0 {
            let sds = SdSGeometry::new(model.lambda, mass).map_err(CliError::core("geometry"))?;
            let res = parallel::solve_backward(&data, &sds, r0, &schedule, &cfg.integrator(&sds))
                .map_err(CliError::core("scattering"))?;
            let (mut diff, mut scale) = (0.0f64, 0.0f64);
            let rho0 = 1.0 / r0;
            for (fs, cs) in res.per_radius.iter().zip(&wb.per_radius) {
                for st in &fs.states {
                    let du_dr = -cs.du_drho.get(st.mode) * rho0 * rho0;
                    diff = diff.max((st.u - cs.u.get(st.mode)).norm()).max((st.du - du_dr).norm());
                    scale = scale.max(st.u.norm()).max(st.du.norm());
                }
            }
            let rel = if scale > 0.0 { diff / scale } else { diff };
            let tol = cfg.perturbed.cross_check_tolerance;
            verdicts.push(Verdict::new("sds_cross_check", rel <= tol, format!("max relative difference {rel:e} (tolerance {tol:e})")));
            Some(rel)
        } else {
            None
        }
    } else {
        None
    };

    let report = PerturbedJson {
        model: ModelFile::from_model(&model),
        detected_class: tag_name(detected),
        psi0_l2,
        psi31_l2,
        log_term,
        residual: ResidualOrderJson {
            log_detected: order.log_detected(),
            rho: order.rho,
            sup_residual: order.sup_residual,
            slope: order.slope,
            slope_log_factored: order.slope_log_factored,
            misfit_without_log: order.misfit_without_log,
            misfit_with_log: order.misfit_with_log,
        },
        weighted_backward: WeightedJson { rho0: wb.rho0, schedule: wb.schedule, gaps: wb.gaps, rate_fit: wb.rate_fit },
        cross_check_max_relative: cross,
    };
    let mut out = Outputs::default();
    out.add("psi31.json", field_to_json(&asymp.psi31));
    out.add("model.json", to_json_bytes(&ModelFile::from_model(&model)));
    Ok(finish(out, "perturbed.json", &report, verdicts))
}
