//! Band-limited functions on the cylinder S¹_L × S².
//!
//! The orthonormal basis is `e^{iωt}/√L · Y_ℓm(θ, φ)` with `ω = 2πk/L` and
//! fully normalised complex spherical harmonics carrying the Condon–Shortley
//! phase, so `Y_{ℓ,−m} = (−1)^m conj(Y_ℓm)` and norms are plain coefficient sums.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// One basis element: Fourier index `k`, degree `ell`, order `em`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub k: i32,
    pub ell: u32,
    pub em: i32,
}

impl ModeIndex {
    pub fn new(k: i32, ell: u32, em: i32) -> Self {
        debug_assert!(em.unsigned_abs() <= ell);
        ModeIndex { k, ell, em }
    }

    /// ω = 2πk/L.
    pub fn omega(&self, period: f64) -> f64 {
        2.0 * PI * self.k as f64 / period
    }

    /// The sphere eigenvalue ℓ(ℓ+1).
    pub fn ell_factor(&self) -> f64 {
        let l = self.ell as f64;
        l * (l + 1.0)
    }

    /// The mode paired with this one by the reality constraint.
    pub fn partner(&self) -> ModeIndex {
        ModeIndex { k: -self.k, ell: self.ell, em: -self.em }
    }

    /// `(−1)^m`.
    pub fn parity(&self) -> f64 {
        if self.em.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Canonical representative of a conjugate pair: `k > 0`, or `k = 0, m ≥ 0`.
    pub fn is_representative(&self) -> bool {
        self.k > 0 || (self.k == 0 && self.em >= 0)
    }
}

/// Truncation of the cylinder basis: `|k| ≤ max_k`, `ℓ ≤ max_ell`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub period: f64,
    pub max_k: u32,
    pub max_ell: u32,
}

impl Band {
    pub fn new(period: f64, max_k: u32, max_ell: u32) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter { what: "period", value: period });
        }
        Ok(Band { period, max_k, max_ell })
    }

    /// The default desk-scale band: L = 2π, K = 8, ℓ ≤ 8.
    pub fn desk() -> Self {
        Band { period: 2.0 * PI, max_k: 8, max_ell: 8 }
    }

    /// Number of basis elements, `(2K + 1)(ℓ_max + 1)²`.
    pub fn len(&self) -> usize {
        let nk = 2 * self.max_k as usize + 1;
        let nl = self.max_ell as usize + 1;
        nk * nl * nl
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, mode: ModeIndex) -> bool {
        mode.k.unsigned_abs() <= self.max_k
            && mode.ell <= self.max_ell
            && mode.em.unsigned_abs() <= mode.ell
    }

    /// Position of `mode` in the canonical ordering (k outermost, then ℓ, then m).
    pub fn index(&self, mode: ModeIndex) -> Option<usize> {
        if !self.contains(mode) {
            return None;
        }
        let nl = self.max_ell as usize + 1;
        let kk = (mode.k + self.max_k as i32) as usize;
        let l = mode.ell as usize;
        Some(kk * nl * nl + l * l + (mode.em + mode.ell as i32) as usize)
    }

    /// Inverse of [`Band::index`].
    pub fn mode_at(&self, index: usize) -> ModeIndex {
        let nl = self.max_ell as usize + 1;
        let per_k = nl * nl;
        let k = (index / per_k) as i32 - self.max_k as i32;
        let rest = index % per_k;
        let l = (rest as f64).sqrt() as usize;
        let l = if (l + 1) * (l + 1) <= rest { l + 1 } else { l };
        let em = (rest - l * l) as i32 - l as i32;
        ModeIndex { k, ell: l as u32, em }
    }

    /// All modes in canonical order.
    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        (0..self.len()).map(move |i| self.mode_at(i))
    }

    pub fn omega(&self, mode: ModeIndex) -> f64 {
        mode.omega(self.period)
    }
}

/// Spectral coefficients of a function on S¹_L × S².
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderField {
    band: Band,
    real: bool,
    coeffs: Vec<Complex64>,
}

impl CylinderField {
    pub fn zeros(band: Band, real: bool) -> Self {
        CylinderField { band, real, coeffs: vec![Complex64::new(0.0, 0.0); band.len()] }
    }

    /// Build from a coefficient vector in canonical order.
    pub fn from_coeffs(band: Band, real: bool, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != band.len() {
            return Err(Error::BandMismatch);
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidParameter { what: "coefficient", value: f64::NAN });
        }
        Ok(CylinderField { band, real, coeffs })
    }

    /// A single basis element with the given amplitude. For real fields the
    /// conjugate partner is filled in as well.
    pub fn single_mode(band: Band, real: bool, mode: ModeIndex, amplitude: Complex64) -> Self {
        let mut f = CylinderField::zeros(band, real);
        f.set(mode, amplitude);
        f
    }

    pub fn band(&self) -> Band {
        self.band
    }
    pub fn is_real(&self) -> bool {
        self.real
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, mode: ModeIndex) -> Complex64 {
        match self.band.index(mode) {
            Some(i) => self.coeffs[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Set one coefficient. On reality-flagged fields the partner coefficient
    /// is set to `(−1)^m conj(c)` so the constraint is maintained; for
    /// self-conjugate modes (k = 0, m = 0) only the real part is kept.
    pub fn set(&mut self, mode: ModeIndex, c: Complex64) {
        let i = self.band.index(mode).expect("mode outside band");
        if self.real {
            let p = mode.partner();
            let j = self.band.index(p).expect("partner outside band");
            if i == j {
                self.coeffs[i] = Complex64::new(c.re, 0.0);
            } else {
                self.coeffs[i] = c;
                self.coeffs[j] = c.conj() * mode.parity();
            }
        } else {
            self.coeffs[i] = c;
        }
    }

    /// Largest violation of the reality constraint (0 for exact real fields).
    pub fn reality_defect(&self) -> f64 {
        self.band
            .modes()
            .map(|m| {
                let c = self.get(m);
                let p = self.get(m.partner());
                (p - c.conj() * m.parity()).norm()
            })
            .fold(0.0, f64::max)
    }

    fn check_same_band(&self, other: &CylinderField) -> Result<()> {
        if self.band == other.band {
            Ok(())
        } else {
            Err(Error::BandMismatch)
        }
    }

    /// `a·self + b·other`; real inputs with real scalars stay real.
    pub fn linear_combination(&self, a: f64, other: &CylinderField, b: f64) -> Result<Self> {
        self.check_same_band(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x * a + y * b).collect();
        Ok(CylinderField { band: self.band, real: self.real && other.real, coeffs })
    }

    pub fn scaled(&self, a: f64) -> Self {
        CylinderField {
            band: self.band,
            real: self.real,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// Multiply each coefficient by a real symbol `s(ω², ℓ)`. Such symbols
    /// commute with conjugation, so the reality flag is preserved.
    pub fn apply_symbol<F: Fn(f64, u32) -> f64>(&self, symbol: F) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let m = self.band.mode_at(i);
                let w = self.band.omega(m);
                c * symbol(w * w, m.ell)
            })
            .collect();
        CylinderField { band: self.band, real: self.real, coeffs }
    }

    /// The symbol of the Laplace–Beltrami operator of `(Λ/3)dt² + γ`.
    pub fn conformal_laplacian_symbol(lambda: f64, omega_sq: f64, ell: u32) -> f64 {
        let l = ell as f64;
        -((3.0 / lambda) * omega_sq + l * (l + 1.0))
    }

    pub fn conformal_laplacian(&self, lambda: f64) -> Self {
        self.apply_symbol(|w2, l| Self::conformal_laplacian_symbol(lambda, w2, l))
    }

    /// `(Σ (1 + ω² + ℓ(ℓ+1))^s |c|²)^{1/2}`.
    pub fn sobolev_norm(&self, s: u32) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let m = self.band.mode_at(i);
                let w = self.band.omega(m);
                (1.0 + w * w + m.ell_factor()).powi(s as i32) * c.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Coefficient inner product `Σ conj(a) b`.
    pub fn inner(&self, other: &CylinderField) -> Result<Complex64> {
        self.check_same_band(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum())
    }

    /// Pointwise complex synthesis `Σ c e^{iωt}/√L Y_ℓm(θ, φ)`.
    pub fn evaluate_complex(&self, t: f64, theta: f64, phi: f64) -> Complex64 {
        let table = LegendreTable::new(self.band.max_ell, theta.cos());
        let inv_sqrt_l = 1.0 / self.band.period.sqrt();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let m = self.band.mode_at(i);
            let phase = self.band.omega(m) * t;
            let y = table.harmonic(m.ell, m.em, phi);
            acc += c * Complex64::from_polar(inv_sqrt_l, phase) * y;
        }
        acc
    }

    /// Pointwise synthesis; for reality-flagged fields this is the (exactly
    /// real up to rounding) value, otherwise the real part.
    pub fn evaluate(&self, t: f64, theta: f64, phi: f64) -> f64 {
        self.evaluate_complex(t, theta, phi).re
    }
}

/// Fully normalised associated Legendre values `P̄_ℓ^m(cos θ)` for `m ≥ 0`,
/// scaled so that `Y_ℓm = P̄_ℓ^m e^{imφ}` (Condon–Shortley phase included).
#[derive(Clone, Debug)]
pub struct LegendreTable {
    max_ell: u32,
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn new(max_ell: u32, x: f64) -> Self {
        let n = max_ell as usize + 1;
        let mut values = vec![0.0; n * n];
        let s = (1.0 - x * x).max(0.0).sqrt();
        // Diagonal: P̄_m^m = (−1)^m sqrt((2m+1)/(4π) ∏_{i≤m} (2i−1)/(2i)) sin^m θ.
        let mut pmm = (1.0 / (4.0 * PI)).sqrt();
        for m in 0..n {
            if m > 0 {
                pmm *= -s * ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
            }
            values[m * n + m] = pmm;
            if m + 1 < n {
                values[(m + 1) * n + m] = x * ((2 * m + 3) as f64).sqrt() * pmm;
            }
            for l in (m + 2)..n {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
                values[l * n + m] = a * (x * values[(l - 1) * n + m] - b * values[(l - 2) * n + m]);
            }
        }
        LegendreTable { max_ell, values }
    }

    /// `P̄_ℓ^m` for `0 ≤ m ≤ ℓ`.
    pub fn get(&self, ell: u32, m: u32) -> f64 {
        let n = self.max_ell as usize + 1;
        self.values[ell as usize * n + m as usize]
    }

    /// `Y_ℓm(θ, φ)` for the θ this table was built at.
    pub fn harmonic(&self, ell: u32, em: i32, phi: f64) -> Complex64 {
        let p = self.get(ell, em.unsigned_abs());
        let y = Complex64::from_polar(p, em.unsigned_abs() as f64 * phi);
        if em >= 0 {
            y
        } else if em % 2 == 0 {
            y.conj()
        } else {
            -y.conj()
        }
    }
}

/// `Y_ℓm(θ, φ)`, orthonormal on the unit sphere.
pub fn spherical_harmonic(ell: u32, em: i32, theta: f64, phi: f64) -> Complex64 {
    LegendreTable::new(ell, theta.cos()).harmonic(ell, em, phi)
}

/// Gauss–Legendre nodes and weights on [−1, 1] (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Values of a field on a tensor grid `t_a × θ_b × φ_c`, stored with φ fastest.
pub fn synthesize_on_grid(field: &CylinderField, ts: &[f64], thetas: &[f64], phis: &[f64]) -> Vec<Complex64> {
    let band = field.band();
    let inv_sqrt_l = 1.0 / band.period.sqrt();
    let nk = 2 * band.max_k as usize + 1;
    // Angular synthesis per Fourier index first: g_k(θ, φ) = Σ_ℓm c Y_ℓm.
    let mut angular = vec![Complex64::new(0.0, 0.0); nk * thetas.len() * phis.len()];
    for (b, &theta) in thetas.iter().enumerate() {
        let table = LegendreTable::new(band.max_ell, theta.cos());
        for (c, &phi) in phis.iter().enumerate() {
            for (i, coeff) in field.coeffs().iter().enumerate() {
                if coeff.re == 0.0 && coeff.im == 0.0 {
                    continue;
                }
                let m = band.mode_at(i);
                let kk = (m.k + band.max_k as i32) as usize;
                angular[(kk * thetas.len() + b) * phis.len() + c] += coeff * table.harmonic(m.ell, m.em, phi);
            }
        }
    }
    let npt = thetas.len() * phis.len();
    let mut out = vec![Complex64::new(0.0, 0.0); ts.len() * npt];
    for (a, &t) in ts.iter().enumerate() {
        for kk in 0..nk {
            let k = kk as i32 - band.max_k as i32;
            let w = 2.0 * PI * k as f64 / band.period;
            let e = Complex64::from_polar(inv_sqrt_l, w * t);
            for p in 0..npt {
                out[a * npt + p] += e * angular[kk * npt + p];
            }
        }
    }
    out
}
