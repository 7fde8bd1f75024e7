use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::spectral::ModeIndex;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar parameter is out of its admissible range (negative Λ, NaN, ...).
    InvalidParameter { what: &'static str, value: f64 },
    /// `3m√Λ ≥ 1`: the cubic has no separated horizon roots.
    NonSubextremal { lambda: f64, mass: f64 },
    /// A radius at or inside the cosmological horizon was requested.
    OutsideExpandingRegion { r: f64, r_c: f64 },
    /// Two spectral fields with different truncations were combined.
    BandMismatch,
    /// The adaptive integrator shrank its step below the representable scale.
    StepSizeUnderflow { x: f64, h: f64 },
    /// The adaptive integrator exceeded its step budget.
    StepLimitExceeded { x: f64, steps: usize },
    /// The solution or the right-hand side stopped being finite.
    NonFinite { x: f64 },
    /// A per-mode failure inside a whole-field operation.
    ModeFailed { mode: ModeIndex, source: Box<Error> },
    /// A commuted energy was requested for a state whose equation is unknown.
    MissingSecondDerivative,
    /// A least-squares fit was too poorly conditioned to trust.
    IllConditionedFit { condition: f64 },
    /// A limiting construction failed to show the expected Cauchy behaviour.
    NonConvergent { detail: String },
    /// The order-ρ⁰ matching relation for ψ₂ degenerates (g̃^{ρρ}(0) ≈ 0).
    SingularMatch { leading: f64 },
    /// The finite-difference oracle needed more steps than its budget allows.
    GridStepRejected { r: f64, steps: usize },
}

impl Error {
    /// True for failures of the time stepping itself (as opposed to bad input).
    pub fn is_integrator_failure(&self) -> bool {
        match self {
            Error::StepSizeUnderflow { .. }
            | Error::StepLimitExceeded { .. }
            | Error::NonFinite { .. }
            | Error::GridStepRejected { .. } => true,
            Error::ModeFailed { source, .. } => source.is_integrator_failure(),
            _ => false,
        }
    }

    /// True when the caller supplied data outside the admissible domain.
    pub fn is_invalid_input(&self) -> bool {
        match self {
            Error::InvalidParameter { .. }
            | Error::NonSubextremal { .. }
            | Error::OutsideExpandingRegion { .. }
            | Error::BandMismatch
            | Error::SingularMatch { .. } => true,
            Error::ModeFailed { source, .. } => source.is_invalid_input(),
            _ => false,
        }
    }

    pub(crate) fn for_mode(self, mode: ModeIndex) -> Error {
        match self {
            e @ Error::ModeFailed { .. } => e,
            e => Error::ModeFailed { mode, source: Box::new(e) },
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { what, value } => {
                write!(f, "invalid parameter {what} = {value}")
            }
            Error::NonSubextremal { lambda, mass } => write!(
                f,
                "parameters (lambda = {lambda}, mass = {mass}) are not subextremal: need 0 < 3m < 1/sqrt(lambda)"
            ),
            Error::OutsideExpandingRegion { r, r_c } => {
                write!(f, "radius {r} is not in the expanding region r > r_c = {r_c}")
            }
            Error::BandMismatch => write!(f, "spectral fields have different truncations"),
            Error::StepSizeUnderflow { x, h } => {
                write!(f, "step size underflow at x = {x} (h = {h:e})")
            }
            Error::StepLimitExceeded { x, steps } => {
                write!(f, "step budget of {steps} exhausted at x = {x}")
            }
            Error::NonFinite { x } => write!(f, "solution became non-finite at x = {x}"),
            Error::ModeFailed { mode, source } => write!(
                f,
                "mode (k = {}, ell = {}, m = {}): {source}",
                mode.k, mode.ell, mode.em
            ),
            Error::MissingSecondDerivative => write!(
                f,
                "commuted energies need the governing equation to supply second derivatives"
            ),
            Error::IllConditionedFit { condition } => {
                write!(f, "least-squares fit is ill conditioned (condition ~ {condition:e})")
            }
            Error::NonConvergent { detail } => write!(f, "construction did not converge: {detail}"),
            Error::SingularMatch { leading } => write!(
                f,
                "order matching is singular: leading coefficient of g^rho rho is {leading}"
            ),
            Error::GridStepRejected { r, steps } => {
                write!(f, "grid oracle rejected after {steps} steps at r = {r}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
