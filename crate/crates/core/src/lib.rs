//! Measurement-induced cooling of a qubit in a structured, finite-temperature
//! bosonic bath.
//!
//! The crate evaluates the second-order time-convolutionless coefficients of
//! the qubit master equation beyond the rotating-wave approximation
//! ([`kernels`]), integrates the generalized Bloch equations with periodic
//! nonselective σ_z measurements ([`dynamics`]), and analyses the
//! measurement-modified factor M(τ) that decides cooling versus heating
//! ([`analysis`]).
//!
//! Units: ħ = k_B = 1 and, by convention, ω_a = 1.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod kernels;
pub mod quadrature;
pub mod spectrum;

pub use analysis::{CoolingReport, ZenoClass};
pub use dynamics::{Protocol, QubitState, Trajectory};
pub use error::{Error, Result};
pub use kernels::{CumulativeJ, KernelDiagnostics, RateSet};
pub use quadrature::{Oscillation, QuadratureSpec};
pub use spectrum::{BathParams, SpectralModel, TabulatedSpectrum};
