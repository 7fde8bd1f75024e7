//! File formats: field coefficients and model descriptions as JSON, state
//! snapshots and energy ledgers as CSV, and all-or-nothing output.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use sdsl_core::conformal::{de_sitter, sds_in_rho, synthetic_g1, ModelKind, TAYLOR_ORDER};
use sdsl_core::energy::LedgerRow;
use sdsl_core::{Band, ClassTag, CylinderField, FieldState, MetricModel, ModeIndex, ModeState, SdSGeometry};

use crate::error::{CliError, CliResult};

fn format_err(path: &Path, detail: impl ToString) -> CliError {
    CliError::Format { path: path.to_path_buf(), detail: detail.to_string() }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// One coefficient of a field file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientRecord {
    pub k: i32,
    pub ell: u32,
    pub em: i32,
    pub re: f64,
    pub im: f64,
}

/// JSON form of a [`CylinderField`]: the band, the reality flag and every
/// coefficient in canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub period: f64,
    pub max_k: u32,
    pub max_ell: u32,
    pub real: bool,
    pub coefficients: Vec<CoefficientRecord>,
}

impl FieldFile {
    pub fn from_field(f: &CylinderField) -> Self {
        let band = f.band();
        FieldFile {
            period: band.period,
            max_k: band.max_k,
            max_ell: band.max_ell,
            real: f.is_real(),
            coefficients: band
                .modes()
                .zip(f.coeffs())
                .map(|(m, c)| CoefficientRecord { k: m.k, ell: m.ell, em: m.em, re: c.re, im: c.im })
                .collect(),
        }
    }

    /// Rebuild the field; unlisted modes are zero and real fields must
    /// satisfy the reality constraint to 1e−12.
    pub fn to_field(&self) -> Result<CylinderField, String> {
        let band = Band::new(self.period, self.max_k, self.max_ell).map_err(|e| e.to_string())?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); band.len()];
        for c in &self.coefficients {
            let i = band
                .index(ModeIndex::new(c.k, c.ell, c.em))
                .ok_or_else(|| format!("mode ({}, {}, {}) is outside the band", c.k, c.ell, c.em))?;
            coeffs[i] = Complex64::new(c.re, c.im);
        }
        let f = CylinderField::from_coeffs(band, self.real, coeffs).map_err(|e| e.to_string())?;
        if self.real && f.reality_defect() > 1e-12 {
            return Err(format!("field is flagged real but violates the reality constraint by {:e}", f.reality_defect()));
        }
        Ok(f)
    }
}

pub fn field_to_json(f: &CylinderField) -> Vec<u8> {
    to_json_bytes(&FieldFile::from_field(f))
}

pub fn read_field(path: &Path) -> CliResult<CylinderField> {
    let file: FieldFile = serde_json::from_str(&read_text(path)?).map_err(|e| format_err(path, e))?;
    file.to_field().map_err(|e| format_err(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

/// One CSV row of a field snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRow {
    pub k: i32,
    pub ell: u32,
    pub em: i32,
    pub r: f64,
    pub re_u: f64,
    pub im_u: f64,
    pub re_du: f64,
    pub im_du: f64,
}

/// CSV of one or more snapshots, one row per mode per radius.
pub fn states_to_csv(states: &[FieldState]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for fs in states {
        for s in &fs.states {
            w.serialize(StateRow {
                k: s.mode.k,
                ell: s.mode.ell,
                em: s.mode.em,
                r: s.r,
                re_u: s.u.re,
                im_u: s.u.im,
                re_du: s.du.re,
                im_du: s.du.im,
            })
            .expect("in-memory CSV write");
        }
    }
    w.into_inner().expect("in-memory CSV flush")
}

/// Parse snapshot CSV back into field states (grouped by radius in file
/// order). Every mode of `band` must be present at every radius.
pub fn read_states_csv(path: &Path, geom: &SdSGeometry, band: Band, real: bool) -> CliResult<Vec<FieldState>> {
    let text = read_text(path)?;
    parse_states_csv(text.as_bytes(), geom, band, real).map_err(|e| format_err(path, e))
}

pub fn parse_states_csv(bytes: &[u8], geom: &SdSGeometry, band: Band, real: bool) -> Result<Vec<FieldState>, String> {
    let mut reader = csv::Reader::from_reader(bytes);
    let mut out: Vec<(FieldState, Vec<bool>)> = Vec::new();
    for row in reader.deserialize::<StateRow>() {
        let row = row.map_err(|e| e.to_string())?;
        let mode = ModeIndex::new(row.k, row.ell, row.em);
        let i = band.index(mode).ok_or_else(|| format!("mode ({}, {}, {}) is outside the band", row.k, row.ell, row.em))?;
        if out.last().map(|(fs, _)| fs.r) != Some(row.r) {
            let fs = FieldState::zeros(geom, band, real, row.r).map_err(|e| e.to_string())?;
            out.push((fs, vec![false; band.len()]));
        }
        let (fs, seen) = out.last_mut().expect("pushed above");
        fs.states[i] = ModeState::new(mode, row.r, Complex64::new(row.re_u, row.im_u), Complex64::new(row.re_du, row.im_du));
        seen[i] = true;
    }
    out.into_iter()
        .map(|(fs, seen)| {
            if seen.iter().all(|s| *s) {
                Ok(fs)
            } else {
                Err(format!("snapshot at r = {} is missing modes", fs.r))
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
struct LedgerCsvRow<'a> {
    r: f64,
    multiplier: &'a str,
    commutator: &'a str,
    flux: f64,
    bulk: f64,
}

/// The energy ledger as CSV with columns `r, multiplier, commutator, flux, bulk`.
pub fn ledger_to_csv(rows: &[LedgerRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(LedgerCsvRow {
            r: row.r,
            multiplier: row.multiplier.name(),
            commutator: row.commutator.name(),
            flux: row.flux,
            bulk: row.bulk,
        })
        .expect("in-memory CSV write");
    }
    w.into_inner().expect("in-memory CSV flush")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFileKind {
    Sds,
    DeSitter,
    SyntheticG1,
    Polynomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaylorFile {
    pub rho_rho: [f64; TAYLOR_ORDER],
    pub tt: [f64; TAYLOR_ORDER],
    pub angular: [f64; TAYLOR_ORDER],
    /// Written for reference; recomputed from the metric on reading.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<[f64; TAYLOR_ORDER]>,
}

/// JSON description of a conformal metric model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub lambda: f64,
    pub class_tag: String,
    pub kind: ModelFileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Required for `polynomial`; ignored (and regenerated) otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taylor: Option<TaylorFile>,
}

fn tag_name(tag: ClassTag) -> &'static str {
    match tag {
        ClassTag::G1 => "G1",
        ClassTag::G2 => "G2",
    }
}

impl ModelFile {
    pub fn from_model(m: &MetricModel) -> Self {
        let (kind, mass, epsilon) = match m.kind {
            ModelKind::SdS { mass } if mass == 0.0 => (ModelFileKind::DeSitter, None, None),
            ModelKind::SdS { mass } => (ModelFileKind::Sds, Some(mass), None),
            ModelKind::SyntheticG1 { epsilon } => (ModelFileKind::SyntheticG1, None, Some(epsilon)),
            ModelKind::Polynomial => (ModelFileKind::Polynomial, None, None),
        };
        ModelFile {
            lambda: m.lambda,
            class_tag: tag_name(m.class_tag).to_string(),
            kind,
            mass,
            epsilon,
            taylor: Some(TaylorFile {
                rho_rho: m.taylor.rho_rho,
                tt: m.taylor.tt,
                angular: m.taylor.angular,
                drift: Some(m.taylor.drift),
            }),
        }
    }

    pub fn to_model(&self) -> Result<MetricModel, String> {
        let tag = match self.class_tag.as_str() {
            "G1" => ClassTag::G1,
            "G2" => ClassTag::G2,
            other => return Err(format!("class_tag must be \"G1\" or \"G2\", got {other:?}")),
        };
        let model = match self.kind {
            ModelFileKind::Sds => {
                let mass = self.mass.ok_or("sds models need a mass")?;
                sds_in_rho(&SdSGeometry::new(self.lambda, mass).map_err(|e| e.to_string())?)
            }
            ModelFileKind::DeSitter => de_sitter(self.lambda).map_err(|e| e.to_string())?,
            ModelFileKind::SyntheticG1 => {
                synthetic_g1(self.lambda, self.epsilon.ok_or("synthetic_g1 models need an epsilon")?).map_err(|e| e.to_string())?
            }
            ModelFileKind::Polynomial => {
                let t = self.taylor.ok_or("polynomial models need taylor coefficients")?;
                MetricModel::polynomial(self.lambda, tag, t.rho_rho, t.tt, t.angular).map_err(|e| e.to_string())?
            }
        };
        if model.class_tag != tag {
            return Err(format!(
                "class_tag {} does not match the model, which is in {}",
                self.class_tag,
                tag_name(model.class_tag)
            ));
        }
        Ok(model)
    }
}

pub fn read_model(path: &Path) -> CliResult<MetricModel> {
    let file: ModelFile = serde_json::from_str(&read_text(path)?).map_err(|e| format_err(path, e))?;
    file.to_model().map_err(|e| format_err(path, e))
}

/// Files produced by a command, held in memory until the run has finished.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Write every file to `dir` through a temporary file in the same
    /// directory followed by an atomic rename.
    pub fn write_all(&self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let target = dir.join(name);
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
            tmp.write_all(bytes).map_err(io_err(&target))?;
            tmp.as_file().sync_all().map_err(io_err(&target))?;
            tmp.persist(&target).map_err(|e| CliError::Io { path: target.clone(), source: e.error })?;
            written.push(target);
        }
        Ok(written)
    }
}
