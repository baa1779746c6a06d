//! The two limiting regimes of the wave-telegraph model, checked by running
//! the solver against references that do not use it.
//!
//! * Undamped: with zero friction the phason field obeys the plain wave
//!   equation. The reference evolves every Fourier mode of the initial data
//!   exactly, `û(t) = û₀ cos(ckt) + ŵ₀ sin(ckt)/(ck)`.
//! * Diffusion: for friction `F` with `F·dt/ρ ≫ 1` the phason field relaxes
//!   like `∂t u = d ∂xx u` with `d = E/F`; the reference damps every mode by
//!   `exp(−d k² t)`.
//!
//! Both studies use a one-component scalar material on a 1D periodic
//! spectral grid and report the largest relative L² error over a set of
//! checkpoints.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::analysis::relative_l2;
use crate::material::MaterialSpec;
use crate::solver::{
    run_with_observer, Grid, InitialCondition, Scheme, Sector, SimState, SolverConfig, SolverError, SourceSet,
    Spatial,
};

#[derive(Clone, Debug, PartialEq)]
pub struct UndampedStudy {
    pub n: usize,
    pub length: f64,
    pub c: f64,
    pub rho: f64,
    pub width: f64,
    pub dt: f64,
    pub duration: f64,
    pub checkpoints: usize,
    pub tolerance: f64,
}

impl Default for UndampedStudy {
    fn default() -> Self {
        Self {
            n: 64,
            length: 2.0 * std::f64::consts::PI,
            c: 1.0,
            rho: 1.0,
            width: 0.6,
            dt: 1e-4,
            duration: 1.0,
            checkpoints: 10,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionStudy {
    pub n: usize,
    pub length: f64,
    pub c: f64,
    pub rho: f64,
    pub width: f64,
    pub dt: f64,
    /// `F·dt/ρ`.
    pub friction_number: f64,
    pub duration: f64,
    pub checkpoints: usize,
    pub tolerance: f64,
}

impl Default for DiffusionStudy {
    fn default() -> Self {
        Self {
            n: 64,
            length: 2.0 * std::f64::consts::PI,
            c: 1.0,
            rho: 1.0,
            width: 0.15,
            dt: 0.05,
            friction_number: 1e3,
            duration: 400.0,
            checkpoints: 10,
            tolerance: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Checkpoint {
    pub t: f64,
    pub relative_l2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitComparison {
    pub name: &'static str,
    pub friction: f64,
    pub dt: f64,
    pub steps: usize,
    /// Errors before this time are excluded from `max_relative_l2`.
    pub compare_after: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub max_relative_l2: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitsReport {
    pub undamped: LimitComparison,
    pub diffusion: LimitComparison,
}

impl LimitsReport {
    pub fn passed(&self) -> bool {
        self.undamped.passed && self.diffusion.passed
    }
}

/// Signed wavenumbers `2πm/L` in FFT order.
fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    (0..n)
        .map(|m| {
            let s = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            2.0 * std::f64::consts::PI * s / length
        })
        .collect()
}

/// Applies the per-mode multiplier `g(k)` to `u`.
fn evolve_modes(u: &[f64], length: f64, g: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = u.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex<f64>> = u.iter().map(|v| Complex::new(*v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (z, k) in buf.iter_mut().zip(wavenumbers(n, length)) {
        *z *= g(k);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|z| z.re / n as f64).collect()
}

fn gaussian_start(mat: &MaterialSpec<f64>, grid: &Grid<f64>, width: f64) -> Result<SimState<f64>, SolverError> {
    crate::solver::build_initial(
        &InitialCondition::Gaussian {
            center: [0.5 * grid.length(), 0.0, 0.0],
            width,
            amplitude: 1.0,
            sector: Sector::Perp,
            component: 0,
        },
        mat,
        grid,
    )
}

fn checkpoint_every(steps: usize, checkpoints: usize) -> usize {
    (steps / checkpoints.max(1)).max(1)
}

/// Runs `cfg` and compares `u⊥` at every snapshot against `reference(t)`.
#[allow(clippy::too_many_arguments)]
fn compare(
    name: &'static str,
    initial: &SimState<f64>,
    mat: &MaterialSpec<f64>,
    grid: &Grid<f64>,
    cfg: &SolverConfig<f64>,
    compare_after: f64,
    tolerance: f64,
    reference: impl Fn(f64) -> Vec<f64>,
) -> Result<LimitComparison, SolverError> {
    let mut checkpoints = Vec::new();
    run_with_observer(initial, mat, grid, &SourceSet::none(), cfg, &mut |step, s| {
        if step > 0 {
            let want = reference(s.t);
            checkpoints.push(Checkpoint {
                t: s.t,
                relative_l2: relative_l2(&s.u_perp[0], &want),
            });
        }
        Ok(())
    })?;
    let max = checkpoints
        .iter()
        .filter(|c| c.t > compare_after)
        .map(|c| c.relative_l2)
        .fold(0.0, f64::max);
    Ok(LimitComparison {
        name,
        friction: mat.friction().get(0, 0),
        dt: cfg.dt,
        steps: cfg.steps,
        compare_after,
        checkpoints,
        max_relative_l2: max,
        tolerance,
        passed: max.is_finite() && max < tolerance,
    })
}

fn steps_for(duration: f64, dt: f64) -> usize {
    (duration / dt).round() as usize
}

pub fn run_undamped(study: &UndampedStudy) -> Result<LimitComparison, SolverError> {
    let mat = MaterialSpec::scalar_model(study.c, f64::INFINITY, study.rho)
        .map_err(|e| SolverError::InvalidConfig(e.to_string()))?;
    let grid = Grid::new(1, study.n, study.length)?;
    let initial = gaussian_start(&mat, &grid, study.width)?;
    let steps = steps_for(study.duration, study.dt);
    let mut cfg = SolverConfig::new(study.dt, steps);
    cfg.spatial = Spatial::Spectral;
    cfg.scheme = Scheme::SemiImplicit;
    cfg.snapshot_every = checkpoint_every(steps, study.checkpoints);
    let u0 = initial.u_perp[0].clone();
    let c = study.c;
    compare("undamped", &initial, &mat, &grid, &cfg, 0.0, study.tolerance, |t| {
        evolve_modes(&u0, study.length, |k| (c * k * t).cos())
    })
}

pub fn run_diffusion(study: &DiffusionStudy) -> Result<LimitComparison, SolverError> {
    let friction = study.friction_number * study.rho / study.dt;
    let tau_tel = 2.0 * study.rho / friction;
    let mat = MaterialSpec::scalar_model(study.c, tau_tel, study.rho)
        .map_err(|e| SolverError::InvalidConfig(e.to_string()))?;
    let stiffness = mat.e().get(0, 0, 0, 0);
    let d = stiffness / friction;
    let grid = Grid::new(1, study.n, study.length)?;
    let mut initial = gaussian_start(&mat, &grid, study.width)?;
    // Start on the slow manifold: w = d ∂xx u.
    let lap = evolve_modes(&initial.u_perp[0], study.length, |k| -k * k);
    initial.w_perp[0] = lap.iter().map(|v| d * v).collect();
    let steps = steps_for(study.duration, study.dt);
    let mut cfg = SolverConfig::new(study.dt, steps);
    cfg.spatial = Spatial::Spectral;
    cfg.scheme = Scheme::SemiImplicit;
    cfg.snapshot_every = checkpoint_every(steps, study.checkpoints);
    let u0 = initial.u_perp[0].clone();
    compare("diffusion", &initial, &mat, &grid, &cfg, 5.0 * tau_tel, study.tolerance, |t| {
        evolve_modes(&u0, study.length, |k| (-d * k * k * t).exp())
    })
}

pub fn run_limits(undamped: &UndampedStudy, diffusion: &DiffusionStudy) -> Result<LimitsReport, SolverError> {
    Ok(LimitsReport {
        undamped: run_undamped(undamped)?,
        diffusion: run_diffusion(diffusion)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modal_evolution_identity() {
        let u: Vec<f64> = (0..16).map(|i| (i as f64 * 0.3).sin()).collect();
        let v = evolve_modes(&u, 1.0, |_| 1.0);
        assert!(relative_l2(&v, &u) < 1e-14);
    }

    #[test]
    fn wavenumber_ordering() {
        let k = wavenumbers(4, 2.0 * std::f64::consts::PI);
        assert_eq!(k, vec![0.0, 1.0, 2.0, -1.0]);
    }

    #[test]
    fn small_undamped_study_is_close() {
        let s = UndampedStudy {
            n: 32,
            dt: 1e-3,
            duration: 0.2,
            checkpoints: 2,
            tolerance: 1e-4,
            ..UndampedStudy::default()
        };
        let r = run_undamped(&s).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.checkpoints.len(), 2);
    }
}
