//! Dispersion relations: closed forms for the scalar diffusion/telegraph
//! equations and the plane-wave eigenproblem of the coupled anisotropic model.

pub mod aniso;
pub mod scalar;

pub use aniso::{assemble_symbol, solve_branches, sweep, AcousticSymbol, BranchSet, DispersionError};
pub use scalar::{
    classify_regime, critical_thresholds, diffusion_dispersion, phase_velocity, telegraph_dispersion,
    DispersionRoot, Regime, Thresholds,
};
