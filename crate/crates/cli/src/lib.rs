//! Command-line front end. [`dispatch`] parses `argv`, runs one subcommand
//! and returns the process exit code:
//!
//! * `0` success,
//! * `1` numerical failure (blow-up, eigensolver failure, failed check),
//! * `2` usage or configuration error.
//!
//! Failures print one JSON line `{"error": kind, "exit_code": n, "message": ..}`
//! on stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qcwave::config::{parse_simulate_config, ResolveError};
use qcwave::dispersion::{self, telegraph_dispersion};
use qcwave::io::{self, IoError};
use qcwave::limits::{run_limits, DiffusionStudy, UndampedStudy};
use qcwave::material::MaterialSpec;
use qcwave::solver::{self, build_initial, probe_columns, run_with_observer, SolverError};
use qcwave::FORMAT_VERSION;
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "qcwave",
    version = concat!(env!("CARGO_PKG_VERSION"), " (format_version 1)"),
    about = "Wave-telegraph elastodynamics of quasicrystals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Material file utilities.
    #[command(subcommand)]
    Material(MaterialCmd),
    /// Dispersion relations.
    #[command(subcommand)]
    Dispersion(DispersionCmd),
    /// Time-domain run driven by a JSON config.
    Simulate(SimulateArgs),
    /// Undamped and diffusion limit studies.
    Limits(LimitsArgs),
}

#[derive(Subcommand, Debug)]
enum MaterialCmd {
    /// Validates a material file and reports energy positivity.
    Check { file: PathBuf },
}

#[derive(Subcommand, Debug)]
enum DispersionCmd {
    /// Closed-form telegraph dispersion over a range of |q|.
    Scalar(ScalarArgs),
    /// Plane-wave branches of a general material along a direction.
    Aniso(AnisoArgs),
}

#[derive(Args, Debug)]
struct Range {
    #[arg(long, default_value_t = 0.0)]
    q_min: f64,
    #[arg(long)]
    q_max: Option<f64>,
    #[arg(long, alias = "n", default_value_t = 101)]
    points: usize,
    /// Output CSV path; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScalarArgs {
    /// Wave speed; required unless --material is given.
    #[arg(long)]
    c: Option<f64>,
    /// Telegraph time; required unless --material is given.
    #[arg(long, alias = "tau")]
    tau_tel: Option<f64>,
    /// One-component uncoupled material to take c and τ from.
    #[arg(long, conflicts_with_all = ["c", "tau_tel"])]
    material: Option<PathBuf>,
    #[command(flatten)]
    range: Range,
}

#[derive(Args, Debug)]
struct AnisoArgs {
    #[arg(long)]
    material: PathBuf,
    /// Comma-separated direction, normalized internally (default x).
    #[arg(long, value_delimiter = ',', conflicts_with = "q_path")]
    direction: Vec<f64>,
    /// File with one wavevector per line; replaces the direction and range.
    #[arg(long, conflicts_with_all = ["direction", "q_max"])]
    q_path: Option<PathBuf>,
    #[command(flatten)]
    range: Range,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides `dt`.
    #[arg(long)]
    dt: Option<f64>,
    /// Overrides `steps`.
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args, Debug)]
struct LimitsArgs {
    /// Writes the JSON report here as well as to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    undamped_tol: Option<f64>,
    #[arg(long)]
    diffusion_tol: Option<f64>,
}

/// Error carrying its exit code and a short machine-readable kind.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            kind: "config",
            message: message.into(),
        }
    }

    fn numerical(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            kind,
            message: message.into(),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Write(_) => Self {
                code: EXIT_NUMERICAL,
                kind: "io",
                message: e.to_string(),
            },
            _ => Self::config(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NumericalBlowup { .. } => Self::numerical("numerical_blowup", e.to_string()),
            _ => Self::config(e.to_string()),
        }
    }
}

impl From<ResolveError> for CliError {
    fn from(e: ResolveError) -> Self {
        Self::config(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(path, e)
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            kind: "io",
            message: format!("{}: {e}", path.display()),
        }
    }
}

/// Runs the command line and returns the exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let line = json!({"error": e.kind, "exit_code": e.code, "message": e.message});
            eprintln!("{line}");
            e.code
        }
    }
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Material(MaterialCmd::Check { file }) => material_check(&file),
        Command::Dispersion(DispersionCmd::Scalar(a)) => dispersion_scalar(&a),
        Command::Dispersion(DispersionCmd::Aniso(a)) => dispersion_aniso(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Limits(a) => limits(&a),
    }
}

fn print_json(v: &serde_json::Value) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(v).expect("json")).map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn material_check(file: &Path) -> Result<(), CliError> {
    let mat = io::read_material(file)?;
    let dims = mat.dims();
    let pd = mat
        .check_energy_pd()
        .map_err(|e| CliError::numerical("eigensolver", e.to_string()))?;
    let times = mat.char_time_tensor().ok().map(|t| t.0.to_rows());
    print_json(&json!({
        "format_version": FORMAT_VERSION,
        "file": file.display().to_string(),
        "n_par": dims.n_par,
        "n_perp": dims.n_perp,
        "rho": mat.rho(),
        "positive_definite": pd.is_pd,
        "min_eigenvalue": pd.min_eigenvalue,
        "undamped": mat.is_undamped(),
        "damping_times": times,
    }))?;
    if pd.is_pd {
        Ok(())
    } else {
        Err(CliError::numerical(
            "not_positive_definite",
            format!("energy form is not positive definite (min eigenvalue {:e})", pd.min_eigenvalue),
        ))
    }
}

fn q_values(r: &Range) -> Result<Vec<f64>, CliError> {
    let q_max = r.q_max.ok_or_else(|| CliError::config("--q-max is required"))?;
    if !(r.q_min.is_finite() && q_max.is_finite() && r.q_min >= 0.0 && q_max >= r.q_min) {
        return Err(CliError::config(format!(
            "need 0 <= q_min <= q_max, got q_min={} q_max={q_max}",
            r.q_min
        )));
    }
    if r.points == 0 {
        return Err(CliError::config("points must be at least 1"));
    }
    Ok((0..r.points)
        .map(|i| {
            if r.points == 1 {
                r.q_min
            } else {
                r.q_min + (q_max - r.q_min) * i as f64 / (r.points - 1) as f64
            }
        })
        .collect())
}

fn write_output(path: &Option<PathBuf>, f: impl FnOnce(&mut dyn Write) -> Result<(), IoError>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let file = fs::File::create(p).map_err(io_err(p))?;
            let mut w = std::io::BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(io_err(p))
        }
        None => {
            let mut out = std::io::stdout().lock();
            f(&mut out)?;
            Ok(())
        }
    }
}

fn scalar_params(a: &ScalarArgs) -> Result<(f64, f64), CliError> {
    if let Some(p) = &a.material {
        let mat = io::read_material(p)?;
        let (_, f_over_rho, c2) = solver::telegraph_coefficients(&mat)?;
        let tau = if f_over_rho > 0.0 { 2.0 / f_over_rho } else { f64::INFINITY };
        return Ok((c2.sqrt(), tau));
    }
    match (a.c, a.tau_tel) {
        (Some(c), Some(t)) => Ok((c, t)),
        _ => Err(CliError::config("give --c and --tau-tel, or --material")),
    }
}

fn dispersion_scalar(a: &ScalarArgs) -> Result<(), CliError> {
    let (c, tau) = scalar_params(a)?;
    let mut rows = Vec::new();
    for q in q_values(&a.range)? {
        let (r1, r2) = telegraph_dispersion(q, c, tau).map_err(|e| CliError::config(e.to_string()))?;
        rows.push((q, r1, r2));
    }
    write_output(&a.range.output, |w| io::write_dispersion_scalar(w, &rows))
}

fn dispersion_aniso(a: &AnisoArgs) -> Result<(), CliError> {
    let mat: MaterialSpec<f64> = io::read_material(&a.material)?;
    let n_par = mat.dims().n_par;
    let path = match &a.q_path {
        Some(p) => {
            let path = io::read_q_path(p)?;
            if let Some((i, q)) = path.iter().enumerate().find(|(_, q)| q.len() != n_par) {
                return Err(CliError::config(format!(
                    "q path entry {i} has {} components, material has n_par = {n_par}",
                    q.len()
                )));
            }
            path
        }
        None => direction_path(a, n_par)?,
    };
    let table = dispersion::sweep(&mat, &path).map_err(|e| CliError::numerical("eigensolver", e.to_string()))?;
    write_output(&a.range.output, |w| io::write_dispersion_aniso(w, &table))?;
    if let Some((point, e)) = table.failures.first() {
        return Err(CliError::numerical(
            "eigensolver",
            format!("{} of {} points failed; first at point {point}: {e}", table.failures.len(), path.len()),
        ));
    }
    Ok(())
}

fn direction_path(a: &AnisoArgs, n_par: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let mut dir = if a.direction.is_empty() { vec![1.0] } else { a.direction.clone() };
    if dir.len() > n_par {
        return Err(CliError::config(format!(
            "direction has {} components, material has n_par = {n_par}",
            dir.len()
        )));
    }
    dir.resize(n_par, 0.0);
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(CliError::config("direction must be a non-zero finite vector"));
    }
    Ok(q_values(&a.range)?
        .into_iter()
        .map(|s| dir.iter().map(|d| s * d / norm).collect())
        .collect())
}

fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.config).map_err(|e| CliError::config(format!("{}: {e}", a.config.display())))?;
    let mut cfg = parse_simulate_config(&text).map_err(|e| CliError::config(e.to_string()))?;
    if let Some(dt) = a.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::config(format!("--dt must be positive, got {dt}")));
        }
        cfg.dt = qcwave::config::TimeStep::Fixed(dt);
    }
    if let Some(s) = a.steps {
        cfg.steps = s;
    }
    let base = a.config.parent().unwrap_or(Path::new("."));
    let run = cfg.resolve(base)?;
    let out_dir = a
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone().map(|p| if p.is_absolute() { p } else { base.join(p) }))
        .unwrap_or_else(|| PathBuf::from("qcwave_out"));
    // Fail on an unstable explicit step before touching the file system.
    solver::Integrator::new(&run.material, run.grid, &run.sources, &run.solver)?;
    let initial = build_initial(&run.initial, &run.material, &run.grid)?;
    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let snap_dir = out_dir.join("snapshots");
    if run.solver.snapshot_every > 0 {
        fs::create_dir_all(&snap_dir).map_err(io_err(&snap_dir))?;
    }
    let mut snapshots = 0usize;
    let mut snap_error: Option<IoError> = None;
    let result = run_with_observer(&initial, &run.material, &run.grid, &run.sources, &run.solver, &mut |step, s| {
        match io::write_snapshot(&snap_dir, step, s, &run.grid) {
            Ok(_) => {
                snapshots += 1;
                Ok(())
            }
            Err(e) => {
                snap_error = Some(e);
                Err(SolverError::InvalidConfig("snapshot write failed".into()))
            }
        }
    });
    if let Some(e) = snap_error {
        return Err(CliError {
            code: EXIT_NUMERICAL,
            kind: "io",
            message: e.to_string(),
        });
    }
    let out = result?;
    let dims = run.material.dims();
    let cols = probe_columns(dims.n_par, dims.n_perp, &run.solver.probes);
    let probes_path = out_dir.join("probes.csv");
    let energy_path = out_dir.join("energy.csv");
    write_output(&Some(probes_path.clone()), |w| io::write_probes(w, &cols, &out.probes))?;
    write_output(&Some(energy_path.clone()), |w| io::write_energy(w, &out.energy))?;
    let last = out.energy.last().expect("initial record");
    print_json(&json!({
        "format_version": FORMAT_VERSION,
        "dt": run.solver.dt,
        "dt_bound": run.dt_bound,
        "steps": run.solver.steps,
        "final_time": out.final_state.t,
        "total_energy": last.total,
        "dissipated": last.dissipated,
        "balance_residual": last.balance_residual,
        "probes_csv": probes_path.display().to_string(),
        "energy_csv": energy_path.display().to_string(),
        "snapshots": snapshots,
    }))
}

fn limits(a: &LimitsArgs) -> Result<(), CliError> {
    let mut u = UndampedStudy::default();
    let mut d = DiffusionStudy::default();
    if let Some(t) = a.undamped_tol {
        u.tolerance = t;
    }
    if let Some(t) = a.diffusion_tol {
        d.tolerance = t;
    }
    let report = run_limits(&u, &d)?;
    let v = json!({"format_version": FORMAT_VERSION, "passed": report.passed(), "report": report});
    if let Some(p) = &a.output {
        fs::write(p, serde_json::to_string_pretty(&v).expect("json") + "\n").map_err(io_err(p))?;
    }
    print_json(&v)?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::numerical("limits_failed", "a limit comparison exceeded its tolerance"))
    }
}
