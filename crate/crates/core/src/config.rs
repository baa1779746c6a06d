//! JSON configuration of a `simulate` run.
//!
//! Parsing walks the document once and collects every problem it finds,
//! each tagged with the path of the offending field, so a user sees all
//! mistakes at once. Unknown keys are errors.
//!
//! ```json
//! {
//!   "material": "material.json",
//!   "grid": {"dim": 1, "n": 256, "length": 6.283185307179586},
//!   "scheme": "semi_implicit",
//!   "spatial": "spectral",
//!   "dt": "auto",
//!   "steps": 4000,
//!   "initial": {"type": "single_mode", "k": [16, 0], "amplitude": 1.0,
//!               "sector": "phason", "shape": "eigen"},
//!   "sources": {"f_perp": {"profile": {"type": "sine", "k": [1, 0, 0]},
//!                          "temporal": {"type": "cos", "omega": 2.0},
//!                          "amplitude": [0.1]}},
//!   "probes": [0, [128]],
//!   "snapshot_every": 100
//! }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{Map, Value};

use crate::io::{self, IoError};
use crate::material::MaterialSpec;
use crate::solver::{
    stability_bound, Grid, InitialCondition, ModeShape, Preset, Profile, RateRule, Scheme, Sector, SolverConfig,
    SourceSet, Spatial, Temporal,
};
use crate::tensor::{zero_mat, zero_vec, Mat3, Vec3};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaIssue {
    /// JSON path such as `grid.n` or `sources.f_perp.amplitude[1]`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", if self.path.is_empty() { "<root>" } else { &self.path }, self.message)
    }
}

/// All problems found in a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaError {
    pub issues: Vec<SchemaIssue>,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.issues.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

impl std::error::Error for SchemaError {}

impl SchemaError {
    fn single(path: &str, message: impl Into<String>) -> Self {
        Self {
            issues: vec![SchemaIssue {
                path: path.into(),
                message: message.into(),
            }],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MaterialSource {
    /// Relative paths are resolved against the config file's directory.
    Path(PathBuf),
    Inline(Value),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStep {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SourcesSpec {
    pub f_par: Option<Preset<f64, Vec3<f64>>>,
    pub f_perp: Option<Preset<f64, Vec3<f64>>>,
    pub beta_p_par: Option<Preset<f64, Mat3<f64>>>,
    pub beta_p_perp: Option<Preset<f64, Mat3<f64>>>,
    pub v_p_par: Option<Preset<f64, Vec3<f64>>>,
    pub v_p_perp: Option<Preset<f64, Vec3<f64>>>,
    pub rate_rule: Option<RateRule>,
}

impl SourcesSpec {
    pub fn to_source_set(&self) -> SourceSet<f64> {
        fn vf(p: &Option<Preset<f64, Vec3<f64>>>) -> Option<Arc<dyn crate::solver::VectorField<f64>>> {
            p.map(|p| Arc::new(p) as Arc<dyn crate::solver::VectorField<f64>>)
        }
        fn tf(p: &Option<Preset<f64, Mat3<f64>>>) -> Option<Arc<dyn crate::solver::TensorField<f64>>> {
            p.map(|p| Arc::new(p) as Arc<dyn crate::solver::TensorField<f64>>)
        }
        SourceSet {
            f_par: vf(&self.f_par),
            f_perp: vf(&self.f_perp),
            beta_p_par: tf(&self.beta_p_par),
            beta_p_perp: tf(&self.beta_p_perp),
            v_p_par: vf(&self.v_p_par),
            v_p_perp: vf(&self.v_p_perp),
            rate_rule: self.rate_rule,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProbeSpec {
    Flat(usize),
    Axes(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateConfig {
    pub material: MaterialSource,
    pub grid: GridSpec,
    pub scheme: Scheme,
    pub spatial: Spatial,
    pub dt: TimeStep,
    pub steps: usize,
    pub initial: InitialCondition<f64>,
    pub sources: SourcesSpec,
    pub probes: Vec<ProbeSpec>,
    pub snapshot_every: usize,
    pub output_dir: Option<PathBuf>,
}

/// Everything a run needs, with `dt` resolved and probes flattened.
#[derive(Debug)]
pub struct ResolvedRun {
    pub material: MaterialSpec<f64>,
    pub grid: Grid<f64>,
    pub solver: SolverConfig<f64>,
    pub initial: InitialCondition<f64>,
    pub sources: SourceSet<f64>,
    /// Stability bound of the configured scheme and discretization.
    pub dt_bound: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ResolveError {
    #[error("{0}")]
    Schema(#[from] SchemaError),
    #[error("material: {0}")]
    Material(#[from] IoError),
}

struct Walker {
    issues: Vec<SchemaIssue>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

impl Walker {
    fn issue(&mut self, path: &str, message: impl Into<String>) {
        self.issues.push(SchemaIssue {
            path: path.to_string(),
            message: message.into(),
        });
    }

    /// The object at `v`, after reporting keys outside `allowed`.
    fn object<'a>(&mut self, v: &'a Value, path: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        let Some(m) = v.as_object() else {
            self.issue(path, format!("expected an object, found {}", kind(v)));
            return None;
        };
        for k in m.keys() {
            if !allowed.contains(&k.as_str()) {
                self.issue(&join(path, k), format!("unknown key (allowed: {})", allowed.join(", ")));
            }
        }
        Some(m)
    }

    fn number(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.issue(path, format!("expected a finite number, found {}", kind(v)));
                None
            }
        }
    }

    fn positive(&mut self, v: &Value, path: &str) -> Option<f64> {
        let x = self.number(v, path)?;
        if x > 0.0 {
            Some(x)
        } else {
            self.issue(path, format!("must be positive, got {x}"));
            None
        }
    }

    fn count(&mut self, v: &Value, path: &str) -> Option<usize> {
        match v.as_u64() {
            Some(x) => Some(x as usize),
            None => {
                self.issue(path, format!("expected a non-negative integer, found {}", kind(v)));
                None
            }
        }
    }

    fn integer(&mut self, v: &Value, path: &str) -> Option<i64> {
        match v.as_i64() {
            Some(x) => Some(x),
            None => {
                self.issue(path, format!("expected an integer, found {}", kind(v)));
                None
            }
        }
    }

    fn required<'a>(&mut self, m: &'a Map<String, Value>, path: &str, key: &str) -> Option<&'a Value> {
        let v = m.get(key);
        if v.is_none() {
            self.issue(&join(path, key), "missing required key");
        }
        v
    }

    fn choice<'a>(&mut self, v: &Value, path: &str, options: &[&'a str]) -> Option<&'a str> {
        let found = v.as_str().and_then(|s| options.iter().find(|o| **o == s).copied());
        if found.is_none() {
            self.issue(path, format!("expected one of {}, found {v}", options.join(", ")));
        }
        found
    }

    /// Up to three numbers, zero-padded.
    fn vec3(&mut self, v: &Value, path: &str) -> Option<Vec3<f64>> {
        let Some(a) = v.as_array() else {
            self.issue(path, format!("expected an array of up to 3 numbers, found {}", kind(v)));
            return None;
        };
        if a.len() > 3 {
            self.issue(path, format!("expected at most 3 entries, found {}", a.len()));
            return None;
        }
        let mut out = zero_vec();
        let mut ok = true;
        for (i, x) in a.iter().enumerate() {
            match self.number(x, &format!("{path}[{i}]")) {
                Some(x) => out[i] = x,
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    /// Up to 3×3 numbers, zero-padded.
    fn mat3(&mut self, v: &Value, path: &str) -> Option<Mat3<f64>> {
        let Some(rows) = v.as_array() else {
            self.issue(path, format!("expected an array of rows, found {}", kind(v)));
            return None;
        };
        if rows.len() > 3 {
            self.issue(path, format!("expected at most 3 rows, found {}", rows.len()));
            return None;
        }
        let mut out = zero_mat();
        let mut ok = true;
        for (i, r) in rows.iter().enumerate() {
            match self.vec3(r, &format!("{path}[{i}]")) {
                Some(r) => out[i] = r,
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn sector(&mut self, m: &Map<String, Value>, path: &str) -> Option<Sector> {
        let v = self.required(m, path, "sector")?;
        match self.choice(v, &join(path, "sector"), &["par", "phonon", "perp", "phason"])? {
            "par" | "phonon" => Some(Sector::Par),
            _ => Some(Sector::Perp),
        }
    }

    fn component(&mut self, m: &Map<String, Value>, path: &str) -> Option<usize> {
        match m.get("component") {
            Some(v) => self.count(v, &join(path, "component")),
            None => Some(0),
        }
    }

    fn amplitude(&mut self, m: &Map<String, Value>, path: &str) -> Option<f64> {
        match m.get("amplitude") {
            Some(v) => self.number(v, &join(path, "amplitude")),
            None => Some(1.0),
        }
    }

    fn grid(&mut self, v: &Value, path: &str) -> Option<GridSpec> {
        let m = self.object(v, path, &["dim", "n", "length"])?;
        let dim = self.required(m, path, "dim").and_then(|v| self.count(v, &join(path, "dim")));
        let n = self.required(m, path, "n").and_then(|v| self.count(v, &join(path, "n")));
        let length = self.required(m, path, "length").and_then(|v| self.positive(v, &join(path, "length")));
        let (dim, n, length) = (dim?, n?, length?);
        if let Err(e) = Grid::new(dim, n, length) {
            self.issue(path, e.to_string());
            return None;
        }
        Some(GridSpec { dim, n, length })
    }

    fn initial(&mut self, v: &Value, path: &str, grid: Option<GridSpec>) -> Option<InitialCondition<f64>> {
        let Some(ty) = v.get("type") else {
            self.issue(&join(path, "type"), "missing required key");
            return None;
        };
        let ty = self.choice(ty, &join(path, "type"), &["zero", "single_mode", "gaussian"])?;
        match ty {
            "zero" => {
                self.object(v, path, &["type"])?;
                Some(InitialCondition::Zero)
            }
            "single_mode" => {
                let m = self.object(v, path, &["type", "k", "q", "amplitude", "sector", "component", "shape"])?;
                let k = self.mode_numbers(m, path, grid);
                let amplitude = self.amplitude(m, path);
                let sector = self.sector(m, path);
                let component = self.component(m, path);
                let shape = match m.get("shape") {
                    Some(v) => match self.choice(v, &join(path, "shape"), &["standing", "eigen"])? {
                        "standing" => Some(ModeShape::Standing),
                        _ => Some(ModeShape::Eigen),
                    },
                    None => Some(ModeShape::Standing),
                };
                Some(InitialCondition::SingleMode {
                    k: k?,
                    amplitude: amplitude?,
                    sector: sector?,
                    component: component?,
                    shape: shape?,
                })
            }
            _ => {
                let m = self.object(v, path, &["type", "center", "width", "amplitude", "sector", "component"])?;
                let center = self.required(m, path, "center").and_then(|v| self.vec3(v, &join(path, "center")));
                let width = self.required(m, path, "width").and_then(|v| self.positive(v, &join(path, "width")));
                let amplitude = self.amplitude(m, path);
                let sector = self.sector(m, path);
                let component = self.component(m, path);
                Some(InitialCondition::Gaussian {
                    center: center?,
                    width: width?,
                    amplitude: amplitude?,
                    sector: sector?,
                    component: component?,
                })
            }
        }
    }

    /// Integer mode numbers from `k`, or from a wavevector `q` that must be
    /// a multiple of `2π/L` on every axis.
    fn mode_numbers(&mut self, m: &Map<String, Value>, path: &str, grid: Option<GridSpec>) -> Option<[i64; 2]> {
        let ints = |w: &mut Self, v: &Value, p: &str| -> Option<Vec<Value>> {
            match v {
                Value::Array(a) if (1..=2).contains(&a.len()) => Some(a.clone()),
                Value::Number(_) => Some(vec![v.clone()]),
                _ => {
                    w.issue(p, format!("expected a number or an array of 1 or 2 numbers, found {}", kind(v)));
                    None
                }
            }
        };
        match (m.get("k"), m.get("q")) {
            (Some(_), Some(_)) => {
                self.issue(path, "give either k or q, not both");
                None
            }
            (None, None) => {
                self.issue(&join(path, "k"), "missing required key (or give q)");
                None
            }
            (Some(v), None) => {
                let p = join(path, "k");
                let a = ints(self, v, &p)?;
                let mut k = [0i64; 2];
                let mut ok = true;
                for (i, x) in a.iter().enumerate() {
                    match self.integer(x, &format!("{p}[{i}]")) {
                        Some(x) => k[i] = x,
                        None => ok = false,
                    }
                }
                ok.then_some(k)
            }
            (None, Some(v)) => {
                let p = join(path, "q");
                let a = ints(self, v, &p)?;
                let grid = grid?;
                let base = 2.0 * std::f64::consts::PI / grid.length;
                let mut k = [0i64; 2];
                let mut ok = true;
                for (i, x) in a.iter().enumerate() {
                    let Some(q) = self.number(x, &format!("{p}[{i}]")) else {
                        ok = false;
                        continue;
                    };
                    let r = q / base;
                    if (r - r.round()).abs() > 1e-9 * r.abs().max(1.0) {
                        self.issue(
                            &format!("{p}[{i}]"),
                            format!("q = {q} is not a multiple of 2π/L = {base}; the grid is periodic"),
                        );
                        ok = false;
                    } else {
                        k[i] = r.round() as i64;
                    }
                }
                ok.then_some(k)
            }
        }
    }

    fn profile(&mut self, v: &Value, path: &str, grid: Option<GridSpec>) -> Option<Profile<f64>> {
        let Some(ty) = v.get("type") else {
            self.issue(&join(path, "type"), "missing required key");
            return None;
        };
        match self.choice(ty, &join(path, "type"), &["uniform", "sine", "gaussian", "box"])? {
            "uniform" => {
                self.object(v, path, &["type"])?;
                Some(Profile::Uniform)
            }
            "sine" => {
                let m = self.object(v, path, &["type", "k", "phase"])?;
                let k = self.required(m, path, "k").and_then(|v| self.vec3(v, &join(path, "k")));
                let phase = match m.get("phase") {
                    Some(v) => self.number(v, &join(path, "phase")),
                    None => Some(0.0),
                };
                Some(Profile::Sine { k: k?, phase: phase? })
            }
            "gaussian" => {
                let m = self.object(v, path, &["type", "center", "width"])?;
                let center = self.required(m, path, "center").and_then(|v| self.vec3(v, &join(path, "center")));
                let width = self.required(m, path, "width").and_then(|v| self.positive(v, &join(path, "width")));
                Some(Profile::Gaussian {
                    center: center?,
                    width: width?,
                    length: grid?.length,
                })
            }
            _ => {
                let m = self.object(v, path, &["type", "lo", "hi"])?;
                let lo = self.required(m, path, "lo").and_then(|v| self.vec3(v, &join(path, "lo")));
                let hi = self.required(m, path, "hi").and_then(|v| self.vec3(v, &join(path, "hi")));
                Some(Profile::Box {
                    lo: lo?,
                    hi: hi?,
                    dim: grid?.dim,
                })
            }
        }
    }

    fn temporal(&mut self, v: &Value, path: &str) -> Option<Temporal<f64>> {
        let Some(ty) = v.get("type") else {
            self.issue(&join(path, "type"), "missing required key");
            return None;
        };
        match self.choice(ty, &join(path, "type"), &["constant", "cos", "ramp"])? {
            "constant" => {
                self.object(v, path, &["type"])?;
                Some(Temporal::Constant)
            }
            "cos" => {
                let m = self.object(v, path, &["type", "omega", "phase"])?;
                let omega = self.required(m, path, "omega").and_then(|v| self.number(v, &join(path, "omega")));
                let phase = match m.get("phase") {
                    Some(v) => self.number(v, &join(path, "phase")),
                    None => Some(0.0),
                };
                Some(Temporal::Cos {
                    omega: omega?,
                    phase: phase?,
                })
            }
            _ => {
                let m = self.object(v, path, &["type", "duration"])?;
                let d = self
                    .required(m, path, "duration")
                    .and_then(|v| self.positive(v, &join(path, "duration")));
                Some(Temporal::Ramp { duration: d? })
            }
        }
    }

    fn preset<A>(
        &mut self,
        v: &Value,
        path: &str,
        grid: Option<GridSpec>,
        amp: fn(&mut Self, &Value, &str) -> Option<A>,
    ) -> Option<Preset<f64, A>> {
        let m = self.object(v, path, &["profile", "temporal", "amplitude"])?;
        let profile = match m.get("profile") {
            Some(p) => self.profile(p, &join(path, "profile"), grid),
            None => Some(Profile::Uniform),
        };
        let temporal = match m.get("temporal") {
            Some(t) => self.temporal(t, &join(path, "temporal")),
            None => Some(Temporal::Constant),
        };
        let amplitude = self.required(m, path, "amplitude").and_then(|a| amp(self, a, &join(path, "amplitude")));
        Some(Preset {
            profile: profile?,
            temporal: temporal?,
            amplitude: amplitude?,
        })
    }

    fn sources(&mut self, v: &Value, path: &str, grid: Option<GridSpec>) -> Option<SourcesSpec> {
        let m = self.object(
            v,
            path,
            &["f_par", "f_perp", "beta_p_par", "beta_p_perp", "v_p_par", "v_p_perp", "rate_rule"],
        )?;
        let mut ok = true;
        let mut out = SourcesSpec::default();
        let mut vector = |w: &mut Self, key: &str, slot: &mut Option<Preset<f64, Vec3<f64>>>| {
            if let Some(v) = m.get(key) {
                *slot = w.preset(v, &join(path, key), grid, Self::vec3);
                ok &= slot.is_some();
            }
        };
        vector(self, "f_par", &mut out.f_par);
        vector(self, "f_perp", &mut out.f_perp);
        vector(self, "v_p_par", &mut out.v_p_par);
        vector(self, "v_p_perp", &mut out.v_p_perp);
        for (key, slot) in [("beta_p_par", &mut out.beta_p_par), ("beta_p_perp", &mut out.beta_p_perp)] {
            if let Some(v) = m.get(key) {
                *slot = self.preset(v, &join(path, key), grid, Self::mat3);
                ok &= slot.is_some();
            }
        }
        if let Some(v) = m.get("rate_rule") {
            out.rate_rule = match self.choice(v, &join(path, "rate_rule"), &["analytic", "centered_difference"]) {
                Some("analytic") => Some(RateRule::Analytic),
                Some(_) => Some(RateRule::CenteredDifference),
                None => {
                    ok = false;
                    None
                }
            };
        } else if out.v_p_par.is_some() || out.v_p_perp.is_some() {
            // Presets carry analytic rates.
            out.rate_rule = Some(RateRule::Analytic);
        }
        ok.then_some(out)
    }

    fn probes(&mut self, v: &Value, path: &str) -> Option<Vec<ProbeSpec>> {
        let Some(a) = v.as_array() else {
            self.issue(path, format!("expected an array, found {}", kind(v)));
            return None;
        };
        let mut out = Vec::new();
        let mut ok = true;
        for (i, p) in a.iter().enumerate() {
            let pp = format!("{path}[{i}]");
            match p {
                Value::Array(ax) => {
                    let idx: Vec<Option<usize>> = ax
                        .iter()
                        .enumerate()
                        .map(|(j, x)| self.count(x, &format!("{pp}[{j}]")))
                        .collect();
                    if idx.iter().all(Option::is_some) {
                        out.push(ProbeSpec::Axes(idx.into_iter().flatten().collect()));
                    } else {
                        ok = false;
                    }
                }
                _ => match self.count(p, &pp) {
                    Some(x) => out.push(ProbeSpec::Flat(x)),
                    None => ok = false,
                },
            }
        }
        ok.then_some(out)
    }
}

const TOP_KEYS: [&str; 11] = [
    "material",
    "grid",
    "scheme",
    "spatial",
    "dt",
    "steps",
    "initial",
    "sources",
    "probes",
    "snapshot_every",
    "output_dir",
];

pub fn parse_simulate_config(text: &str) -> Result<SimulateConfig, SchemaError> {
    let root: Value = serde_json::from_str(text).map_err(|e| SchemaError::single("", format!("invalid JSON: {e}")))?;
    let mut w = Walker { issues: Vec::new() };
    let Some(m) = w.object(&root, "", &TOP_KEYS) else {
        return Err(SchemaError { issues: w.issues });
    };

    let material = w.required(m, "", "material").and_then(|v| match v {
        Value::String(s) => Some(MaterialSource::Path(PathBuf::from(s))),
        Value::Object(_) => Some(MaterialSource::Inline(v.clone())),
        _ => {
            w.issue("material", format!("expected a file path or an object, found {}", kind(v)));
            None
        }
    });
    let grid = w.required(m, "", "grid").and_then(|v| w.grid(v, "grid"));
    let scheme = match m.get("scheme") {
        Some(v) => match w.choice(v, "scheme", &["semi_implicit", "explicit"]) {
            Some("explicit") => Some(Scheme::Explicit),
            Some(_) => Some(Scheme::SemiImplicit),
            None => None,
        },
        None => Some(Scheme::SemiImplicit),
    };
    let spatial = match m.get("spatial") {
        Some(v) => match w.choice(v, "spatial", &["spectral", "fd2"]) {
            Some("fd2") => Some(Spatial::FD2),
            Some(_) => Some(Spatial::Spectral),
            None => None,
        },
        None => Some(Spatial::Spectral),
    };
    let dt = match m.get("dt") {
        None => Some(TimeStep::Auto),
        Some(Value::String(s)) if s == "auto" => Some(TimeStep::Auto),
        Some(v @ Value::Number(_)) => w.positive(v, "dt").map(TimeStep::Fixed),
        Some(v) => {
            w.issue("dt", format!("expected a positive number or \"auto\", found {v}"));
            None
        }
    };
    let steps = w.required(m, "", "steps").and_then(|v| w.count(v, "steps"));
    let initial = match m.get("initial") {
        Some(v) => w.initial(v, "initial", grid),
        None => Some(InitialCondition::Zero),
    };
    let sources = match m.get("sources") {
        Some(v) => w.sources(v, "sources", grid),
        None => Some(SourcesSpec::default()),
    };
    let probes = match m.get("probes") {
        Some(v) => w.probes(v, "probes"),
        None => Some(Vec::new()),
    };
    let snapshot_every = match m.get("snapshot_every") {
        Some(v) => w.count(v, "snapshot_every"),
        None => Some(0),
    };
    let output_dir = match m.get("output_dir") {
        Some(Value::String(s)) => Some(Some(PathBuf::from(s))),
        Some(v) => {
            w.issue("output_dir", format!("expected a string, found {}", kind(v)));
            None
        }
        None => Some(None),
    };

    if !w.issues.is_empty() {
        return Err(SchemaError { issues: w.issues });
    }
    Ok(SimulateConfig {
        material: material.expect("checked"),
        grid: grid.expect("checked"),
        scheme: scheme.expect("checked"),
        spatial: spatial.expect("checked"),
        dt: dt.expect("checked"),
        steps: steps.expect("checked"),
        initial: initial.expect("checked"),
        sources: sources.expect("checked"),
        probes: probes.expect("checked"),
        snapshot_every: snapshot_every.expect("checked"),
        output_dir: output_dir.expect("checked"),
    })
}

impl SimulateConfig {
    /// Loads the material, checks shapes against it and resolves `dt`.
    /// `base_dir` anchors a relative material path.
    pub fn resolve(&self, base_dir: &Path) -> Result<ResolvedRun, ResolveError> {
        let material = match &self.material {
            MaterialSource::Path(p) => {
                let full = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
                io::read_material(&full)?
            }
            MaterialSource::Inline(v) => io::material_from_value(v)?,
        };
        let dims = material.dims();
        let grid = Grid::new(self.grid.dim, self.grid.n, self.grid.length)
            .map_err(|e| SchemaError::single("grid", e.to_string()))?;
        let mut issues = Vec::new();
        let mut push = |path: &str, message: String| {
            issues.push(SchemaIssue {
                path: path.into(),
                message,
            })
        };
        if grid.dim() > dims.n_par {
            push(
                "grid.dim",
                format!("grid dimension {} exceeds the material's n_par = {}", grid.dim(), dims.n_par),
            );
        }
        match self.initial {
            InitialCondition::SingleMode { sector, component, .. } | InitialCondition::Gaussian { sector, component, .. } => {
                let n = match sector {
                    Sector::Par => dims.n_par,
                    Sector::Perp => dims.n_perp,
                };
                if component >= n {
                    push("initial.component", format!("component {component} out of range for {n} components"));
                }
            }
            InitialCondition::Zero => {}
        }
        let mut probes = Vec::with_capacity(self.probes.len());
        for (i, p) in self.probes.iter().enumerate() {
            let flat = match p {
                ProbeSpec::Flat(x) => (*x < grid.n_points()).then_some(*x),
                ProbeSpec::Axes(ax) => grid.flat(ax),
            };
            match flat {
                Some(x) => probes.push(x),
                None => push(&format!("probes[{i}]"), format!("{p:?} is outside the grid")),
            }
        }
        if !issues.is_empty() {
            return Err(SchemaError { issues }.into());
        }
        let dt_bound = stability_bound(&material, &grid, self.spatial, self.scheme);
        let dt = match self.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto => dt_bound,
        };
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SchemaError::single("dt", "\"auto\" needs a material with a finite wave speed").into());
        }
        Ok(ResolvedRun {
            material,
            grid,
            solver: SolverConfig {
                dt,
                steps: self.steps,
                scheme: self.scheme,
                spatial: self.spatial,
                probes,
                snapshot_every: self.snapshot_every,
            },
            initial: self.initial,
            sources: self.sources.to_source_set(),
            dt_bound,
        })
    }
}
