use crate::material::MaterialSpec;
use crate::scalar::Real;

use super::grid::Grid;
use super::integrator::Integrator;
use super::sources::SourceSet;
use super::state::SimState;
use super::{SolverConfig, SolverError};

/// Probe values at one step: for every probe, all `u` then all `w`
/// components (phonon before phason).
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSample<T> {
    pub step: usize,
    pub t: T,
    pub values: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRecord<T> {
    pub step: usize,
    pub t: T,
    pub kinetic: T,
    pub elastic: T,
    pub total: T,
    pub dissipated: T,
    pub work: T,
    pub balance_residual: T,
    pub discrete_energy: T,
}

#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub final_state: SimState<T>,
    pub probes: Vec<ProbeSample<T>>,
    pub energy: Vec<EnergyRecord<T>>,
}

/// Column names matching [`ProbeSample::values`].
pub fn probe_columns(n_par: usize, n_perp: usize, probes: &[usize]) -> Vec<String> {
    let mut cols = Vec::new();
    for p in probes {
        for (kind, sector, n) in [("u", "par", n_par), ("u", "perp", n_perp), ("w", "par", n_par), ("w", "perp", n_perp)] {
            for k in 0..n {
                cols.push(format!("p{p}_{kind}_{sector}{k}"));
            }
        }
    }
    cols
}

fn sample<T: Real>(state: &SimState<T>, probes: &[usize], step: usize) -> ProbeSample<T> {
    let mut values = Vec::new();
    for &p in probes {
        for f in state.u_par.iter().chain(&state.u_perp).chain(&state.w_par).chain(&state.w_perp) {
            values.push(f[p]);
        }
    }
    ProbeSample { step, t: state.t, values }
}

fn record<T: Real>(integ: &mut Integrator<'_, T>, state: &SimState<T>) -> Result<EnergyRecord<T>, SolverError> {
    let r = integ.energy_report(state)?;
    Ok(EnergyRecord {
        step: r.step,
        t: r.t,
        kinetic: r.kinetic,
        elastic: r.elastic,
        total: r.kinetic + r.elastic,
        dissipated: r.dissipated_cumulative,
        work: r.work_cumulative,
        balance_residual: r.balance_residual,
        discrete_energy: r.discrete_energy,
    })
}

/// Callback receiving `(step, state)`; an error aborts the run.
pub type Observer<'a, T> = dyn FnMut(usize, &SimState<T>) -> Result<(), SolverError> + 'a;

/// Runs `cfg.steps` steps, recording probes and energies at every step.
/// `observer` receives the state at step 0 and every `snapshot_every`
/// steps.
pub fn run_with_observer<T: Real>(
    initial: &SimState<T>,
    mat: &MaterialSpec<T>,
    grid: &Grid<T>,
    sources: &SourceSet<T>,
    cfg: &SolverConfig<T>,
    observer: &mut Observer<'_, T>,
) -> Result<RunOutput<T>, SolverError> {
    initial.check_shape(mat.dims(), grid)?;
    let n = grid.n_points();
    if let Some(&bad) = cfg.probes.iter().find(|&&p| p >= n) {
        return Err(SolverError::InvalidConfig(format!("probe index {bad} outside grid of {n} points")));
    }
    let mut integ = Integrator::new(mat, *grid, sources, cfg)?;
    let mut state = initial.clone();
    let mut probes = Vec::with_capacity(cfg.steps + 1);
    let mut energy = Vec::with_capacity(cfg.steps + 1);
    probes.push(sample(&state, &cfg.probes, 0));
    energy.push(record(&mut integ, &state)?);
    if cfg.snapshot_every > 0 {
        observer(0, &state)?;
    }
    for step in 1..=cfg.steps {
        integ.step(&mut state)?;
        probes.push(sample(&state, &cfg.probes, step));
        energy.push(record(&mut integ, &state)?);
        if cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0 {
            observer(step, &state)?;
        }
    }
    Ok(RunOutput {
        final_state: state,
        probes,
        energy,
    })
}

pub fn run<T: Real>(
    initial: &SimState<T>,
    mat: &MaterialSpec<T>,
    grid: &Grid<T>,
    sources: &SourceSet<T>,
    cfg: &SolverConfig<T>,
) -> Result<RunOutput<T>, SolverError> {
    run_with_observer(initial, mat, grid, sources, cfg, &mut |_, _| Ok(()))
}
