//! Time-domain integration of the coupled phonon–phason equations of motion
//! on periodic 1D/2D grids.
//!
//! ```text
//! ρ ü∥ = div σ∥(∇u − βᴾ) + f∥ + ρ ∂t vᴾ∥
//! ρ ü⊥ = div σ⊥(∇u − βᴾ) + f⊥ + ρ ∂t vᴾ⊥ − F (u̇⊥ − vᴾ⊥)
//! ```
//!
//! With all plastic fields zero this is the compatible system; with `vᴾ = 0`
//! the usual elastoplastic one.

mod grid;
mod integrator;
mod run;
mod sources;
mod spatial;
mod state;

pub use grid::{Grid, MAX_POINTS_1D, MAX_POINTS_2D};
pub use integrator::{EnergyReport, Integrator};
pub use run::{probe_columns, run, run_with_observer, EnergyRecord, ProbeSample, RunOutput};
pub use sources::{
    FnTensor, FnVector, Preset, Profile, RateRule, SourceSet, Temporal, TensorField, VectorField,
};
pub use spatial::{Spatial, SpatialOps};
pub use state::{build_initial, mode_wavevector, modal_amplitude, nearest_point, InitialCondition, ModeShape, Sector, SimState};

use thiserror::Error;

use crate::dispersion::aniso::assemble_symbol;
use crate::linalg::symmetric_eigen;
use crate::material::MaterialSpec;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite field value after step {step}")]
    NumericalBlowup { step: usize },
    #[error("plastic velocity {field} has no time-derivative rule")]
    MissingSourceDerivative { field: &'static str },
    #[error("dt = {dt} exceeds the explicit stability bound {bound}")]
    UnstableTimeStep { dt: f64, bound: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Trapezoidal friction solve inside each half kick.
    SemiImplicit,
    /// Friction by an explicit predictor-corrector inside each half kick.
    Explicit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub dt: T,
    pub steps: usize,
    pub scheme: Scheme,
    pub spatial: Spatial,
    /// Flat grid indices.
    pub probes: Vec<usize>,
    /// `0` disables snapshots.
    pub snapshot_every: usize,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(dt: T, steps: usize) -> Self {
        Self {
            dt,
            steps,
            scheme: Scheme::SemiImplicit,
            spatial: Spatial::Spectral,
            probes: Vec::new(),
            snapshot_every: 0,
        }
    }

    pub(crate) fn validate_basic(&self) -> Result<(), SolverError> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(SolverError::InvalidConfig(format!("dt must be positive and finite, got {}", self.dt)));
        }
        Ok(())
    }
}

const SAFETY: f64 = 0.9;

/// Largest phase speed `sqrt(λ_max(K(q̂))/ρ)` over unit wavevectors in the
/// grid's directions.
pub fn max_wave_speed<T: Real>(mat: &MaterialSpec<T>, grid_dim: usize) -> T {
    let n_par = mat.dims().n_par;
    let samples = if grid_dim == 1 { 1 } else { 180 };
    let mut lmax = T::zero();
    for s in 0..samples {
        let th = T::PI() * T::from_usize_lossy(s) / T::from_usize_lossy(samples);
        let mut q = vec![T::zero(); n_par];
        q[0] = th.cos();
        if grid_dim > 1 && n_par > 1 {
            q[1] = th.sin();
        }
        if let Ok(sym) = assemble_symbol(mat, &q) {
            if let Ok((vals, _)) = symmetric_eigen(&sym.stiffness()) {
                if let Some(v) = vals.last() {
                    lmax = lmax.max(*v);
                }
            }
        }
    }
    (lmax / mat.rho()).sqrt()
}

/// Largest stable `dt` with a `0.9` safety factor.
///
/// Wave part: `Δx/(c_max √dim)` for FD2 and `2Δx/(π c_max √dim)` for the
/// spectral operator. The explicit scheme is further limited by friction to
/// `2ρ/λ_max(F)`.
pub fn stability_bound<T: Real>(mat: &MaterialSpec<T>, grid: &Grid<T>, spatial: Spatial, scheme: Scheme) -> T {
    let c = max_wave_speed(mat, grid.dim());
    let root_dim = T::from_usize_lossy(grid.dim()).sqrt();
    let h = grid.spacing();
    let wave = if c > T::zero() {
        let base = match spatial {
            Spatial::FD2 => h,
            Spatial::Spectral => T::lit(2.0) * h / T::PI(),
        };
        T::lit(SAFETY) * base / (c * root_dim)
    } else {
        T::infinity()
    };
    match scheme {
        Scheme::SemiImplicit => wave,
        Scheme::Explicit => {
            let r = mat.dims().n_perp;
            let f = crate::linalg::Dense::from_fn(r, |i, j| mat.friction().get(i, j));
            let fmax = symmetric_eigen(&f)
                .ok()
                .and_then(|(v, _)| v.last().copied())
                .unwrap_or(T::zero());
            if fmax > T::zero() {
                wave.min(T::lit(SAFETY) * T::lit(2.0) * mat.rho() / fmax)
            } else {
                wave
            }
        }
    }
}

/// One step of the compatible system (body forces only).
pub fn step_compatible<T: Real>(
    state: &SimState<T>,
    mat: &MaterialSpec<T>,
    grid: &Grid<T>,
    sources: &SourceSet<T>,
    cfg: &SolverConfig<T>,
) -> Result<SimState<T>, SolverError> {
    if sources.has_plastic() {
        return Err(SolverError::InvalidConfig(
            "compatible step does not accept plastic sources".into(),
        ));
    }
    single_step(state, mat, grid, sources, cfg)
}

/// One step of the full incompatible system.
pub fn step_incompatible<T: Real>(
    state: &SimState<T>,
    mat: &MaterialSpec<T>,
    grid: &Grid<T>,
    sources: &SourceSet<T>,
    cfg: &SolverConfig<T>,
) -> Result<SimState<T>, SolverError> {
    single_step(state, mat, grid, sources, cfg)
}

fn single_step<T: Real>(
    state: &SimState<T>,
    mat: &MaterialSpec<T>,
    grid: &Grid<T>,
    sources: &SourceSet<T>,
    cfg: &SolverConfig<T>,
) -> Result<SimState<T>, SolverError> {
    let mut integ = Integrator::new(mat, *grid, sources, cfg)?;
    let mut next = state.clone();
    integ.step(&mut next)?;
    Ok(next)
}

/// Coefficients `(1, F/ρ, E/ρ)` of the normalized scalar telegraph
/// equation `ü + (F/ρ) u̇ − (E/ρ) u'' = 0` for a one-component, uncoupled
/// material.
pub fn telegraph_coefficients<T: Real>(mat: &MaterialSpec<T>) -> Result<(T, T, T), SolverError> {
    let d = mat.dims();
    if d.n_par != 1 || d.n_perp != 1 || mat.d().max_abs() != T::zero() {
        return Err(SolverError::InvalidConfig(
            "telegraph coefficients need a 1D uncoupled material".into(),
        ));
    }
    let rho = mat.rho();
    Ok((T::one(), mat.friction().get(0, 0) / rho, mat.e().get(0, 0, 0, 0) / rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fd2_bound_example() {
        let mat = MaterialSpec::<f64>::scalar_model(1.0, 2.0, 1.0).unwrap();
        let g = Grid::new(1, 10, 1.0).unwrap();
        let b = stability_bound(&mat, &g, Spatial::FD2, Scheme::SemiImplicit);
        assert!((b - 0.09).abs() < 1e-15);
        let mat2 = MaterialSpec::<f64>::scalar_model(2.0, 2.0, 1.0).unwrap();
        let b2 = stability_bound(&mat2, &g, Spatial::FD2, Scheme::SemiImplicit);
        assert!((b2 - 0.045).abs() < 1e-15);
        let s = stability_bound(&mat, &g, Spatial::Spectral, Scheme::SemiImplicit);
        assert!((s - 0.18 / PI).abs() < 1e-15);
    }

    #[test]
    fn explicit_bound_includes_friction() {
        let mat = MaterialSpec::<f64>::scalar_model(1.0, 1e-3, 1.0).unwrap();
        let g = Grid::new(1, 10, 1.0).unwrap();
        let b = stability_bound(&mat, &g, Spatial::FD2, Scheme::Explicit);
        assert!((b - 0.9 * 2.0 / 2000.0).abs() < 1e-15);
    }

    #[test]
    fn telegraph_coefficients_of_scalar_model() {
        let mat = MaterialSpec::<f64>::scalar_model(1.5, 4.0, 1.0).unwrap();
        let (a, b, c) = telegraph_coefficients(&mat).unwrap();
        assert_eq!((a, b, c), (1.0, 0.5, 2.25));
    }

    #[test]
    fn zero_state_stays_zero() {
        let mat = MaterialSpec::<f64>::scalar_model(1.0, 2.0, 1.0).unwrap();
        let g = Grid::new(1, 16, 1.0).unwrap();
        let s0 = SimState::zeros(mat.dims(), &g);
        let cfg = SolverConfig::new(0.01, 1);
        let mut s = s0.clone();
        for _ in 0..10 {
            s = step_compatible(&s, &mat, &g, &SourceSet::none(), &cfg).unwrap();
        }
        assert!(s.u_par.iter().chain(&s.u_perp).all(|f| f.iter().all(|v| *v == 0.0)));
        assert!((s.t - 0.1).abs() < 1e-15);
    }

    #[test]
    fn explicit_above_bound_is_refused() {
        let mat = MaterialSpec::<f64>::scalar_model(1.0, 2.0, 1.0).unwrap();
        let g = Grid::new(1, 10, 1.0).unwrap();
        let mut cfg = SolverConfig::new(0.2, 1);
        cfg.scheme = Scheme::Explicit;
        cfg.spatial = Spatial::FD2;
        let src = SourceSet::none();
        assert!(matches!(
            Integrator::new(&mat, g, &src, &cfg),
            Err(SolverError::UnstableTimeStep { .. })
        ));
    }

    #[test]
    fn plastic_velocity_needs_rate_rule() {
        use std::sync::Arc;
        let mat = MaterialSpec::<f64>::scalar_model(1.0, 2.0, 1.0).unwrap();
        let g = Grid::new(1, 16, 1.0).unwrap();
        let src = SourceSet {
            v_p_perp: Some(Arc::new(Preset {
                profile: Profile::Uniform,
                temporal: Temporal::Constant,
                amplitude: [1.0, 0.0, 0.0],
            })),
            ..SourceSet::none()
        };
        let cfg = SolverConfig::new(0.01, 1);
        assert!(matches!(
            Integrator::new(&mat, g, &src, &cfg),
            Err(SolverError::MissingSourceDerivative { .. })
        ));
        let s = SimState::zeros(mat.dims(), &g);
        assert!(step_compatible(&s, &mat, &g, &src, &cfg).is_err());
    }
}
