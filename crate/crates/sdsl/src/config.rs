//! The run configuration: one JSON document, validated in full before any
//! computation starts.
//!
//! Every radius in the file is given in units of the cosmological horizon
//! radius `r_c`, so a configuration stays meaningful when Λ or m change; the
//! accessors on [`RunConfig`] return absolute radii.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sdsl_core::evolution::Variable;
use sdsl_core::scattering::{geometric, RoundTripConfig};
use sdsl_core::{Band, IntegratorConfig, ModeIndex, SdSGeometry};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub band: BandConfig,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub radii: RadiiConfig,
    /// Seed of the random data generator (overridable with `--seed`).
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub forward: ForwardConfig,
    #[serde(default)]
    pub roundtrip: RoundTripSection,
    #[serde(default)]
    pub residual: ResidualConfig,
    #[serde(default)]
    pub perturbed: PerturbedConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub lambda: f64,
    pub mass: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandConfig {
    pub period: f64,
    pub max_k: u32,
    pub max_ell: u32,
}

impl Default for BandConfig {
    fn default() -> Self {
        BandConfig { period: 2.0 * PI, max_k: 8, max_ell: 8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableChoice {
    Radius,
    InverseRadius,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Radius (in r_c) beyond which the integration runs in ρ = 1/r.
    pub switch_radius: f64,
    pub variable: VariableChoice,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection { rel_tol: 1e-10, abs_tol: 1e-14, switch_radius: 2.0, variable: VariableChoice::InverseRadius }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadiiConfig {
    /// Radius (in r_c) of the Cauchy hypersurface where data live or the
    /// backward construction ends.
    pub r0: f64,
    /// Backward schedule R₁ < R₂ < … (in r_c).
    pub schedule: Vec<f64>,
    /// Fit radii for the forward extraction (in r_c); defaults to 12
    /// geometric points in `[r_max/8, r_max]` of the command block.
    pub fit_radii: Option<Vec<f64>>,
}

impl Default for RadiiConfig {
    fn default() -> Self {
        RadiiConfig { r0: 1.5, schedule: vec![25.0, 50.0, 100.0, 200.0], fit_radii: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    /// Seeded random real coefficients damped by `(1 + ω² + L)^{-decay}`.
    Random,
    /// `amplitude` in the constant mode (k, ℓ, m) = (0, 0, 0), zero elsewhere.
    Constant,
    Zero,
    /// `amplitude` in the single mode `mode` (and its conjugate partner).
    SingleMode,
    /// Two coefficient files (`first`, `second`) in the field JSON format.
    Files,
}

/// Data for a run. Forward-type commands read `(first, second)` as Cauchy
/// data `(ψ, ∂_rψ)` on Σ_{r0}; scattering-type commands read them as the
/// boundary data `(ψ₀, ψ₃)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub kind: DataKind,
    pub decay: f64,
    pub amplitude: f64,
    /// `[k, ell, em]` for `single_mode`.
    pub mode: Option<[i32; 3]>,
    /// Which halves are populated by the generated kinds.
    pub first: bool,
    pub second: bool,
    /// Field files for `files` (relative paths resolve against the config).
    pub first_path: Option<PathBuf>,
    pub second_path: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            kind: DataKind::Random,
            decay: 2.0,
            amplitude: 1.0,
            mode: None,
            first: true,
            second: true,
            first_path: None,
            second_path: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardConfig {
    /// Outer radius of the forward run (in r_c).
    pub r_max: f64,
    /// Number of geometric trajectory samples in `[r0, r_max]`.
    pub samples: usize,
    /// Bound on the fitted r⁻¹ coefficient relative to `‖ψ₀‖_{L²}`.
    pub spurious_threshold: f64,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig { r_max: 200.0, samples: 24, spurious_threshold: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoundTripSection {
    /// Largest backward radius and outermost fit radius (in r_c).
    pub r_max: f64,
    pub fit_points: usize,
    /// Largest admissible relative H¹ error of ψ₀ and ψ₃.
    pub tolerance: f64,
}

impl Default for RoundTripSection {
    fn default() -> Self {
        RoundTripSection { r_max: 200.0, fit_points: 12, tolerance: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResidualConfig {
    /// Radii (in r_c) at which the weighted residual norm is sampled.
    pub residual_radii: Vec<f64>,
    /// Radii (in r_c) of the remainder decay profile.
    pub decay_radii: Vec<f64>,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        ResidualConfig { residual_radii: geometric(10.0, 1000.0, 7), decay_radii: geometric(20.0, 160.0, 4) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    /// The Schwarzschild–de Sitter background of the `geometry` block.
    Sds,
    /// Pure de Sitter with the configured Λ.
    DeSitter,
    /// The one-parameter first-order perturbation of de Sitter.
    SyntheticG1,
    /// A model description file.
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbedConfig {
    pub model: ModelChoice,
    pub epsilon: f64,
    pub model_path: Option<PathBuf>,
    /// ρ-samples for the residual-order fit (defaults to `[1e-4, 1e-2]`).
    pub rho_samples: Option<Vec<f64>>,
    /// Relative agreement required between the conformal and r-coordinate
    /// pipelines for the SdS model.
    pub cross_check_tolerance: f64,
}

impl Default for PerturbedConfig {
    fn default() -> Self {
        PerturbedConfig {
            model: ModelChoice::SyntheticG1,
            epsilon: 0.1,
            model_path: None,
            rho_samples: None,
            cross_check_tolerance: 1e-7,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_finite_positive(what: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be finite and positive, got {v}")))
    }
}

fn check_radii(what: &str, radii: &[f64]) -> CliResult<()> {
    if radii.is_empty() {
        return Err(invalid(format!("{what} must not be empty")));
    }
    for &r in radii {
        if !(r.is_finite() && r > 1.0) {
            return Err(invalid(format!("{what}: radius {r} (in units of r_c) must exceed 1")));
        }
    }
    Ok(())
}

fn check_increasing(what: &str, radii: &[f64]) -> CliResult<()> {
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

impl RunConfig {
    /// Parse a JSON document (no validation).
    pub fn from_json(text: &str) -> CliResult<RunConfig> {
        serde_json::from_str(text).map_err(|e| invalid(format!("malformed config: {e}")))
    }

    /// Read and parse a config file, resolving relative data paths against
    /// the file's directory.
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = RunConfig::from_json(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for p in [&mut cfg.data.first_path, &mut cfg.data.second_path, &mut cfg.perturbed.model_path].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn sds(&self) -> CliResult<SdSGeometry> {
        SdSGeometry::new(self.geometry.lambda, self.geometry.mass).map_err(CliError::core("geometry"))
    }

    pub fn band(&self) -> CliResult<Band> {
        Band::new(self.band.period, self.band.max_k, self.band.max_ell).map_err(CliError::core("cylinder_spectral"))
    }

    /// The whole schema check; run before any computation.
    pub fn validate(&self) -> CliResult<()> {
        let geom = self.sds()?;
        self.band()?;
        self.integrator(&geom).validate().map_err(CliError::core("mode_evolution"))?;
        check_finite_positive("integrator.switch_radius", self.integrator.switch_radius)?;
        check_radii("radii.r0", &[self.radii.r0])?;
        check_radii("radii.schedule", &self.radii.schedule)?;
        check_increasing("radii.schedule", &self.radii.schedule)?;
        if !(self.radii.schedule[0] > self.radii.r0) {
            return Err(invalid("radii.schedule must start above radii.r0"));
        }
        if let Some(fr) = &self.radii.fit_radii {
            check_radii("radii.fit_radii", fr)?;
            check_increasing("radii.fit_radii", fr)?;
            if fr.len() < 8 {
                return Err(invalid("radii.fit_radii needs at least 8 radii for the five-term fit"));
            }
            if !(fr[0] > self.radii.r0) {
                return Err(invalid("radii.fit_radii must lie above radii.r0"));
            }
        }
        if !(self.data.decay.is_finite() && self.data.decay >= 0.0) {
            return Err(invalid("data.decay must be finite and non-negative"));
        }
        if !self.data.amplitude.is_finite() {
            return Err(invalid("data.amplitude must be finite"));
        }
        match self.data.kind {
            DataKind::SingleMode => {
                let [k, ell, em] = self.data.mode.ok_or_else(|| invalid("data.mode is required for single_mode"))?;
                let band = self.band()?;
                if ell < 0 || !band.contains(ModeIndex::new(k, ell as u32, em)) {
                    return Err(invalid(format!("data.mode [{k}, {ell}, {em}] is outside the band")));
                }
            }
            DataKind::Files => {
                if self.data.first_path.is_none() || self.data.second_path.is_none() {
                    return Err(invalid("data.first_path and data.second_path are required for files"));
                }
            }
            _ => {}
        }
        check_radii("forward.r_max", &[self.forward.r_max])?;
        if !(self.forward.r_max > self.radii.r0) {
            return Err(invalid("forward.r_max must exceed radii.r0"));
        }
        if self.forward.samples < 2 {
            return Err(invalid("forward.samples must be at least 2"));
        }
        check_finite_positive("forward.spurious_threshold", self.forward.spurious_threshold)?;
        check_radii("roundtrip.r_max", &[self.roundtrip.r_max])?;
        if !(self.roundtrip.r_max / 8.0 > self.radii.r0) {
            return Err(invalid("roundtrip.r_max / 8 must exceed radii.r0"));
        }
        if self.roundtrip.fit_points < 8 {
            return Err(invalid("roundtrip.fit_points must be at least 8"));
        }
        check_finite_positive("roundtrip.tolerance", self.roundtrip.tolerance)?;
        check_radii("residual.residual_radii", &self.residual.residual_radii)?;
        check_increasing("residual.residual_radii", &self.residual.residual_radii)?;
        check_radii("residual.decay_radii", &self.residual.decay_radii)?;
        check_increasing("residual.decay_radii", &self.residual.decay_radii)?;
        if self.residual.residual_radii.len() < 2 || self.residual.decay_radii.len() < 2 {
            return Err(invalid("residual radii lists need at least two entries"));
        }
        if !(self.perturbed.epsilon.is_finite() && self.perturbed.epsilon.abs() < 1.0) {
            return Err(invalid("perturbed.epsilon must satisfy |epsilon| < 1"));
        }
        if self.perturbed.model == ModelChoice::File && self.perturbed.model_path.is_none() {
            return Err(invalid("perturbed.model_path is required for model = file"));
        }
        if let Some(rs) = &self.perturbed.rho_samples {
            if rs.len() < 8 || rs.iter().any(|r| !(r.is_finite() && *r > 0.0 && *r <= 0.1)) {
                return Err(invalid("perturbed.rho_samples needs at least 8 values in (0, 0.1]"));
            }
        }
        check_finite_positive("perturbed.cross_check_tolerance", self.perturbed.cross_check_tolerance)?;
        Ok(())
    }

    pub fn integrator(&self, geom: &SdSGeometry) -> IntegratorConfig {
        IntegratorConfig {
            rel_tol: self.integrator.rel_tol,
            abs_tol: self.integrator.abs_tol,
            variable: match self.integrator.variable {
                VariableChoice::Radius => Variable::Radius,
                VariableChoice::InverseRadius => Variable::InverseRadius,
            },
            switch_radius: self.integrator.switch_radius * geom.r_c(),
        }
    }

    fn scale(geom: &SdSGeometry, v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| x * geom.r_c()).collect()
    }

    pub fn r0(&self, geom: &SdSGeometry) -> f64 {
        self.radii.r0 * geom.r_c()
    }

    pub fn schedule(&self, geom: &SdSGeometry) -> Vec<f64> {
        Self::scale(geom, &self.radii.schedule)
    }

    /// Forward fit radii; default 12 geometric points in `[r_max/8, r_max]`.
    pub fn fit_radii(&self, geom: &SdSGeometry, r_max: f64) -> Vec<f64> {
        match &self.radii.fit_radii {
            Some(fr) => Self::scale(geom, fr),
            None => geometric(r_max / 8.0, r_max, 12),
        }
    }

    pub fn forward_r_max(&self, geom: &SdSGeometry) -> f64 {
        self.forward.r_max * geom.r_c()
    }

    pub fn round_trip(&self, geom: &SdSGeometry) -> RoundTripConfig {
        let mut rt = RoundTripConfig::new(geom);
        rt.integrator = self.integrator(geom);
        rt.fit_points = self.roundtrip.fit_points;
        rt
    }

    pub fn roundtrip_r_max(&self, geom: &SdSGeometry) -> f64 {
        self.roundtrip.r_max * geom.r_c()
    }

    pub fn residual_radii(&self, geom: &SdSGeometry) -> Vec<f64> {
        Self::scale(geom, &self.residual.residual_radii)
    }

    pub fn decay_radii(&self, geom: &SdSGeometry) -> Vec<f64> {
        Self::scale(geom, &self.residual.decay_radii)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::from_json(r#"{"geometry": {"lambda": 3.0, "mass": 0.1}}"#).unwrap();
        assert_eq!(cfg.band, BandConfig::default());
        assert_eq!(cfg.radii.schedule, vec![25.0, 50.0, 100.0, 200.0]);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = RunConfig::from_json(r#"{"geometry": {"lambda": 3.0, "mass": 0.1, "charge": 1.0}}"#).unwrap_err();
        assert!(err.to_string().contains("charge"));
    }

    #[test]
    fn radii_inside_the_horizon_are_rejected() {
        let mut cfg = RunConfig::from_json(r#"{"geometry": {"lambda": 3.0, "mass": 0.1}}"#).unwrap();
        cfg.radii.r0 = 0.9;
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }
}
