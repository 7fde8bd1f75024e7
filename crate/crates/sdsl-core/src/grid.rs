//! Brute-force method-of-lines oracle for the full coordinate equation.
//!
//! The field lives on a tensor grid over S¹_L × S²: uniform in t and φ and
//! cell-centred in θ, so no grid point sits on a pole. Second-order centred
//! differences discretise `∂_t²` and `∂_φ²`, and the θ part of the sphere
//! Laplacian is a finite-volume stencil whose face weights `sin θ` vanish at
//! the poles (the regularised pole treatment). The radial system
//!
//! ```text
//! ∂_r ψ = Π/(r²Δ),      ∂_r Π = (r²/Δ) ∂_t²ψ + Δ_{S²} ψ
//! ```
//!
//! is then integrated with the same adaptive Runge–Kutta scheme as the modes.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::evolution::FieldState;
use crate::geometry::SdSGeometry;
use crate::ode::Dopri5;
use crate::spectral::synthesize_on_grid;

/// Grid resolution `n_t × n_θ × n_φ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub nt: usize,
    pub ntheta: usize,
    pub nphi: usize,
}

impl GridSpec {
    pub fn new(nt: usize, ntheta: usize, nphi: usize) -> Result<Self> {
        for (what, n) in [("nt", nt), ("ntheta", ntheta), ("nphi", nphi)] {
            if n < 3 {
                return Err(Error::InvalidParameter { what, value: n as f64 });
            }
        }
        Ok(GridSpec { nt, ntheta, nphi })
    }

    pub fn len(&self) -> usize {
        self.nt * self.ntheta * self.nphi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ts(&self, period: f64) -> Vec<f64> {
        (0..self.nt).map(|a| a as f64 * period / self.nt as f64).collect()
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.ntheta).map(|b| (b as f64 + 0.5) * PI / self.ntheta as f64).collect()
    }

    pub fn phis(&self) -> Vec<f64> {
        (0..self.nphi).map(|c| c as f64 * 2.0 * PI / self.nphi as f64).collect()
    }

    /// The refinement with every spacing halved.
    pub fn refined(&self) -> Self {
        GridSpec { nt: 2 * self.nt, ntheta: 2 * self.ntheta, nphi: 2 * self.nphi }
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.ntheta + b) * self.nphi + c
    }
}

/// Grid samples of `(ψ, ∂_rψ)` on Σ_r, index order t, θ, φ (φ fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub period: f64,
    pub r: f64,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
}

impl GridField {
    /// Sample the real part of a spectral state on the grid.
    pub fn sample(fs: &FieldState, spec: GridSpec) -> Self {
        let ts = spec.ts(fs.band.period);
        let th = spec.thetas();
        let ph = spec.phis();
        let psi = synthesize_on_grid(&fs.u_field(), &ts, &th, &ph).iter().map(|c| c.re).collect();
        let dpsi = synthesize_on_grid(&fs.du_field(), &ts, &th, &ph).iter().map(|c| c.re).collect();
        GridField { spec, period: fs.band.period, r: fs.r, psi, dpsi }
    }

    /// Maximum pointwise difference of ψ.
    pub fn max_difference(&self, other: &GridField) -> f64 {
        self.psi.iter().zip(&other.psi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Maximum of |ψ| over the grid.
    pub fn max_abs(&self) -> f64 {
        self.psi.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }
}

/// Discrete `(r²/Δ) ∂_t²ψ + Δ_{S²}ψ`.
struct Stencil {
    spec: GridSpec,
    inv_dt2: f64,
    inv_dphi2: f64,
    inv_dth2: f64,
    sin_c: Vec<f64>,
    sin_face: Vec<f64>,
}

impl Stencil {
    fn new(spec: GridSpec, period: f64) -> Self {
        let dt = period / spec.nt as f64;
        let dphi = 2.0 * PI / spec.nphi as f64;
        let dth = PI / spec.ntheta as f64;
        let sin_c = spec.thetas().iter().map(|t| t.sin()).collect();
        // Faces b − ½ for b = 0..=nθ; the polar faces carry zero flux.
        let sin_face = (0..=spec.ntheta)
            .map(|b| if b == 0 || b == spec.ntheta { 0.0 } else { (b as f64 * dth).sin() })
            .collect();
        Stencil { spec, inv_dt2: 1.0 / (dt * dt), inv_dphi2: 1.0 / (dphi * dphi), inv_dth2: 1.0 / (dth * dth), sin_c, sin_face }
    }

    fn apply(&self, time_weight: f64, psi: &[f64], out: &mut [f64]) {
        let s = self.spec;
        for a in 0..s.nt {
            let ap = (a + 1) % s.nt;
            let am = (a + s.nt - 1) % s.nt;
            for b in 0..s.ntheta {
                let sc = self.sin_c[b];
                let (fm, fp) = (self.sin_face[b], self.sin_face[b + 1]);
                for c in 0..s.nphi {
                    let cp = (c + 1) % s.nphi;
                    let cm = (c + s.nphi - 1) % s.nphi;
                    let i = s.idx(a, b, c);
                    let v = psi[i];
                    let tt = (psi[s.idx(ap, b, c)] - 2.0 * v + psi[s.idx(am, b, c)]) * self.inv_dt2;
                    let pp = (psi[s.idx(a, b, cp)] - 2.0 * v + psi[s.idx(a, b, cm)]) * self.inv_dphi2 / (sc * sc);
                    let up = if b + 1 < s.ntheta { fp * (psi[s.idx(a, b + 1, c)] - v) } else { 0.0 };
                    let dn = if b > 0 { fm * (v - psi[s.idx(a, b - 1, c)]) } else { 0.0 };
                    let th = (up - dn) * self.inv_dth2 / sc;
                    out[i] = time_weight * tt + th + pp;
                }
            }
        }
    }
}

/// Evolve grid data from `initial.r` to `r_target` with the full coordinate
/// equation. `max_steps` bounds the explicit step count.
pub fn grid_oracle(
    geom: &SdSGeometry,
    initial: &GridField,
    r_target: f64,
    rel_tol: f64,
    max_steps: usize,
) -> Result<GridField> {
    geom.check_radius(initial.r)?;
    geom.check_radius(r_target)?;
    let spec = initial.spec;
    let n = spec.len();
    if initial.psi.len() != n || initial.dpsi.len() != n {
        return Err(Error::InvalidParameter { what: "grid data length", value: initial.psi.len() as f64 });
    }
    let stencil = Stencil::new(spec, initial.period);
    let mut y = vec![0.0; 2 * n];
    let q0 = geom.q(initial.r);
    y[..n].copy_from_slice(&initial.psi);
    for i in 0..n {
        y[n + i] = q0 * initial.dpsi[i];
    }
    let rhs = |r: f64, y: &[f64], d: &mut [f64]| {
        let delta = geom.delta(r);
        let q = r * r * delta;
        let (psi, pi) = y.split_at(n);
        let (dpsi, dpi) = d.split_at_mut(n);
        for i in 0..n {
            dpsi[i] = pi[i] / q;
        }
        stencil.apply(r * r / delta, psi, dpi);
    };
    let stepper = Dopri5::new(rel_tol, rel_tol * 1e-3).with_max_steps(max_steps);
    stepper.integrate(rhs, initial.r, &mut y, r_target).map_err(|e| match e {
        Error::StepLimitExceeded { x, steps } | Error::GridStepRejected { r: x, steps } => {
            Error::GridStepRejected { r: x, steps }
        }
        other => other,
    })?;
    let q1 = geom.q(r_target);
    Ok(GridField {
        spec,
        period: initial.period,
        r: r_target,
        psi: y[..n].to_vec(),
        dpsi: y[n..].iter().map(|p| p / q1).collect(),
    })
}
