//! Shared fixtures for the benchmarks in `benches/`.

use zenocool_core::{BathParams, SpectralModel};

/// Modified Lorentzian with α = 0.01, Λ = 0.25, ω0 = 1.5.
pub fn lorentzian() -> SpectralModel {
    SpectralModel::modified_lorentzian(0.01, 0.25, 1.5).expect("valid parameters")
}

/// Super-Ohmic (s = 3) spectrum with α = 0.01 and cutoff 2.
pub fn super_ohmic() -> SpectralModel {
    SpectralModel::super_ohmic(0.01, 3.0, 2.0).expect("valid parameters")
}

/// β = 2, ω_a = 1.
pub fn bath() -> BathParams {
    BathParams::new(2.0, 1.0).expect("valid parameters")
}
