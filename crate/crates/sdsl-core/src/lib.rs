//! Numerical core for linear waves on the expanding region of
//! Schwarzschild–de Sitter.
//!
//! The crate is `no_std` (it needs only `alloc`) so the kernels can be reused
//! from any host; file formats, parallel drivers and the command-line front end
//! live in the companion `sdsl` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod conformal;
pub mod energy;
pub mod error;
pub mod evolution;
pub mod fit;
pub mod geometry;
pub mod grid;
pub mod ode;
pub mod scattering;
pub mod spectral;

pub use asymptotics::{build_asymptotic, AsymptoticSolution};
pub use conformal::{build_asymptotic_conformal, ClassTag, ConformalAsymptoticSolution, MetricModel};
pub use error::{Error, Result};
pub use evolution::{FieldState, IntegratorConfig, ModeParams, ModeState, SourceTerm, Variable};
pub use geometry::{KruskalChart, RadialCoefficients, SdSGeometry};
pub use scattering::{ScatteringData, ScatteringResult};
pub use spectral::{Band, CylinderField, ModeIndex};
