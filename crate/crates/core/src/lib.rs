//! Correlation functions of a particle beam emitted from a thermal Gaussian
//! source through a Gaussian monochromator, detected by finite-resolution
//! Gaussian detectors.
//!
//! The library computes the single-particle distribution, the two-particle
//! interference term, and the normalized two-particle distribution C̄ for
//! fermions (antibunching dip), bosons (bunching peak), and classical
//! particles (flat), by three routes:
//!
//! * `Analytic` — closed forms valid for a well-monochromatized beam in the
//!   far field,
//! * `GaussianApprox` — the saddle-point (Gaussian) reduction of the angular
//!   integrals, with the momentum integrals done numerically,
//! * `Numeric` — full quadrature of the momentum/angle integrals with no
//!   Gaussian approximation.
//!
//! Internal units are natural: ħ = 1, the particle mass defaults to 1, and
//! lengths are expressed in units of the lateral source window `w` (so the
//! canonical source has `w = 1`). [`params::to_natural`] converts SI inputs.

pub mod beamprofile;
pub mod collinear;
pub mod dists;
pub mod experiments;
pub mod numerics;
pub mod offaxis;
pub mod params;

pub use params::{
    BeamSpec, CorrResult, DetectorSpec, EvalMeta, Geometry, Method, SourceSpec, Statistics,
};

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("unit conversion: {0}")]
    UnitConversion(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Quadrature failed to reach the requested tolerance; carries the best
    /// estimate and its error bound.
    #[error("quadrature did not converge: best={best:.6e} err={err:.3e} ({detail})")]
    Convergence { best: f64, err: f64, detail: String },

    #[error("symmetry violation: {0}")]
    Symmetry(String),

    #[error("far-field precondition violated: {0}")]
    FarField(String),

    #[error("validation failure: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
