//! The Schwarzschild–de Sitter background on the expanding region r > r_C.
//!
//! The metric is `g = −Δ⁻¹dr² + Δdt² + r²γ` with
//! `Δ(r) = (Λ/3)r² − 1 + 2m/r`, so that `rΔ = p(r) = (Λ/3)r³ − r + 2m`.
//! Everything here is cached at construction; radial coefficients are cheap
//! closed forms evaluated on demand.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Relative margin under which `3m√Λ` is treated as extremal. Near the double
/// root the horizon radii are determined only to `O(√ε)` anyway.
const EXTREMAL_MARGIN: f64 = 1e-12;

/// Immutable background: parameters, horizon roots and Kruskal constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdSGeometry {
    lambda: f64,
    mass: f64,
    r_h: f64,
    r_c: f64,
    r_bar: f64,
    kappa_c: f64,
    alpha_h: f64,
    alpha_bar_c: f64,
}

/// Pointwise metric data at a fixed area radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialCoefficients {
    pub r: f64,
    /// Δ(r) = φ⁻².
    pub delta: f64,
    /// φ = Δ^{−1/2}.
    pub lapse: f64,
    /// dΔ/dr.
    pub delta_prime: f64,
}

impl SdSGeometry {
    /// Locate the three real roots of `(Λ/3)r³ − r + 2m` and cache the
    /// derived surface gravity and Kruskal exponents.
    pub fn new(lambda: f64, mass: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter { what: "lambda", value: lambda });
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidParameter { what: "mass", value: mass });
        }
        if 3.0 * mass * lambda.sqrt() >= 1.0 - EXTREMAL_MARGIN {
            return Err(Error::NonSubextremal { lambda, mass });
        }
        let p = |r: f64| (lambda / 3.0) * r * r * r - r + 2.0 * mass;
        let inv_sqrt = 1.0 / lambda.sqrt();
        // p(2m) > 0 > p(3m) and p(1/√Λ) < 0 < p(2/√Λ); p(−2/√Λ) < 0 < p(−1/√Λ).
        let r_h = bisect(p, 2.0 * mass, 3.0 * mass);
        let r_c = bisect(p, inv_sqrt, 2.0 * inv_sqrt);
        let r_bar = bisect(p, -2.0 * inv_sqrt, -inv_sqrt);

        let mut geom = SdSGeometry {
            lambda,
            mass,
            r_h,
            r_c,
            r_bar,
            kappa_c: 0.0,
            alpha_h: 0.0,
            alpha_bar_c: 0.0,
        };
        geom.kappa_c = 0.5 * (lambda / 3.0) * (r_c - r_h) * (r_c - r_bar) / r_c;
        let kappa_h = 0.5 * geom.delta_prime(r_h).abs();
        let kappa_bar = 0.5 * geom.delta_prime(r_bar).abs();
        geom.alpha_h = geom.kappa_c / kappa_h;
        geom.alpha_bar_c = geom.kappa_c / kappa_bar;
        Ok(geom)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }
    /// Black-hole horizon root r_H (lies in (2m, 3m)).
    pub fn r_h(&self) -> f64 {
        self.r_h
    }
    /// Cosmological horizon root r_C.
    pub fn r_c(&self) -> f64 {
        self.r_c
    }
    /// The negative root r̄_C = −(r_H + r_C).
    pub fn r_bar(&self) -> f64 {
        self.r_bar
    }
    /// Surface gravity κ_C of the cosmological horizon (closed form).
    pub fn surface_gravity(&self) -> f64 {
        self.kappa_c
    }
    /// `(α_H, ᾱ_C)`, the surface-gravity ratios κ_C/κ_H and κ_C/κ̄.
    pub fn kruskal_exponents(&self) -> (f64, f64) {
        (self.alpha_h, self.alpha_bar_c)
    }

    /// The cubic `p(r) = rΔ(r)`.
    pub fn cubic(&self, r: f64) -> f64 {
        (self.lambda / 3.0) * r * r * r - r + 2.0 * self.mass
    }

    /// Δ(r) = (Λ/3)r² − 1 + 2m/r.
    pub fn delta(&self, r: f64) -> f64 {
        (self.lambda / 3.0) * r * r - 1.0 + 2.0 * self.mass / r
    }

    /// Δ′(r) = (2Λ/3)r − 2m/r².
    pub fn delta_prime(&self, r: f64) -> f64 {
        (2.0 * self.lambda / 3.0) * r - 2.0 * self.mass / (r * r)
    }

    /// Δ″(r) = 2Λ/3 + 4m/r³.
    pub fn delta_second(&self, r: f64) -> f64 {
        2.0 * self.lambda / 3.0 + 4.0 * self.mass / (r * r * r)
    }

    /// The flux weight Q(r) = r²Δ(r).
    pub fn q(&self, r: f64) -> f64 {
        r * self.cubic(r)
    }

    /// Q′(r) = (4Λ/3)r³ − 2r + 2m.
    pub fn q_prime(&self, r: f64) -> f64 {
        (4.0 * self.lambda / 3.0) * r * r * r - 2.0 * r + 2.0 * self.mass
    }

    /// Q″(r) = 4Λr² − 2.
    pub fn q_second(&self, r: f64) -> f64 {
        4.0 * self.lambda * r * r - 2.0
    }

    /// D(ρ) = ρ²Δ(1/ρ) = Λ/3 − ρ² + 2mρ³, regular at ρ = 0.
    pub fn d_of_rho(&self, rho: f64) -> f64 {
        self.lambda / 3.0 - rho * rho + 2.0 * self.mass * rho * rho * rho
    }

    /// dD/dρ = −2ρ + 6mρ².
    pub fn d_of_rho_prime(&self, rho: f64) -> f64 {
        -2.0 * rho + 6.0 * self.mass * rho * rho
    }

    /// Reject radii that are not in the expanding region.
    pub fn check_radius(&self, r: f64) -> Result<()> {
        if r.is_finite() && r > self.r_c {
            Ok(())
        } else {
            Err(Error::OutsideExpandingRegion { r, r_c: self.r_c })
        }
    }

    pub fn radial_coefficients(&self, r: f64) -> Result<RadialCoefficients> {
        self.check_radius(r)?;
        let delta = self.delta(r);
        Ok(RadialCoefficients {
            r,
            delta,
            lapse: 1.0 / delta.sqrt(),
            delta_prime: self.delta_prime(r),
        })
    }

    /// The Kruskal chart attached to this background.
    pub fn kruskal(&self) -> KruskalChart {
        KruskalChart { geometry: *self }
    }
}

/// Bisection to the resolution of `f64`; `f(a)` and `f(b)` must differ in sign.
fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..2000 {
        let mid = 0.5 * (a + b);
        if mid <= a.min(b) || mid >= a.max(b) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

/// Kruskal-type double null chart regular across the cosmological horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KruskalChart {
    geometry: SdSGeometry,
}

impl KruskalChart {
    pub fn geometry(&self) -> &SdSGeometry {
        &self.geometry
    }

    /// `log(uv)` for r > r_C, evaluated term by term for accuracy at large r.
    pub fn log_uv(&self, r: f64) -> f64 {
        let g = &self.geometry;
        (r - g.r_c).ln() - g.alpha_h * (r - g.r_h).ln() - g.alpha_bar_c * (r - g.r_bar).ln()
    }

    /// The product `uv = (r − r_C)/((r − r_H)^{α_H}(r + |r̄_C|)^{ᾱ_C})`;
    /// zero on the horizon and tending to one at Σ⁺.
    pub fn uv_of_r(&self, r: f64) -> f64 {
        if r <= self.geometry.r_c {
            return 0.0;
        }
        self.log_uv(r).exp()
    }

    /// Conformal factor Ω² in `g = −Ω² du dv + r²γ`; finite and positive at r_C.
    pub fn omega_sq(&self, r: f64) -> f64 {
        let g = &self.geometry;
        let kc = g.kappa_c;
        (g.lambda / 3.0) / (kc * kc * r)
            * (r - g.r_h).powf(1.0 + g.alpha_h)
            * (r - g.r_bar).powf(1.0 + g.alpha_bar_c)
    }

    /// `(u, v)` with `uv` as above and `log|u/v| = −2κ_C t`.
    pub fn kruskal_map(&self, r: f64, t: f64) -> Result<(f64, f64)> {
        self.geometry.check_radius(r)?;
        let root = (0.5 * self.log_uv(r)).exp();
        let kt = self.geometry.kappa_c * t;
        Ok((root * (-kt).exp(), root * kt.exp()))
    }

    /// Invert `uv(r)` on (r_C, ∞) by bracketed bisection in `log(uv)`.
    pub fn r_of_uv(&self, uv: f64) -> Result<f64> {
        if !(uv > 0.0 && uv < 1.0) {
            return Err(Error::InvalidParameter { what: "uv", value: uv });
        }
        let target = uv.ln();
        let r_c = self.geometry.r_c;
        let mut hi = 2.0 * r_c;
        while self.log_uv(hi) < target {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::InvalidParameter { what: "uv", value: uv });
            }
        }
        let mut lo = r_c;
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.log_uv(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
