//! File formats: material JSON, CSV tables and raw snapshots.
//!
//! CSV files start with a `# qcwave format_version=N kind=...` comment line,
//! then a header row, then one row per record. Numbers are written with 17
//! significant digits. Snapshots are one raw little-endian `f64` file per
//! field (row-major, `y` slowest) with a JSON sidecar of the same stem.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::aniso::SweepTable;
use crate::dispersion::scalar::DispersionRoot;
use crate::material::{BuildOptions, Dims, MaterialError, MaterialSpec, Nested2, Nested4};
use crate::solver::{EnergyRecord, Grid, ProbeSample, SimState};
use crate::FORMAT_VERSION;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {found} (this build reads {expected})")]
    Version { found: u32, expected: u32 },
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("{0}")]
    Format(String),
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(file_err(path))
}

fn check_version(v: Option<u32>) -> Result<(), IoError> {
    match v {
        Some(found) if found != FORMAT_VERSION => Err(IoError::Version {
            found,
            expected: FORMAT_VERSION,
        }),
        _ => Ok(()),
    }
}

/// Full tensor form of a material file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format_version: Option<u32>,
    pub n_par: usize,
    pub n_perp: usize,
    pub rho: f64,
    #[serde(rename = "C")]
    pub c: Nested4<f64>,
    #[serde(rename = "D")]
    pub d: Nested4<f64>,
    #[serde(rename = "E")]
    pub e: Nested4<f64>,
    pub friction: Nested2<f64>,
}

/// Parameters of the one-dimensional scalar telegraph material.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarModel {
    pub c: f64,
    /// Absent or `null` for the undamped wave model.
    #[serde(default)]
    pub tau_tel: Option<f64>,
    #[serde(default = "one")]
    pub rho: f64,
}

fn one() -> f64 {
    1.0
}

impl ScalarModel {
    pub fn build(&self) -> Result<MaterialSpec<f64>, MaterialError> {
        MaterialSpec::scalar_model(self.c, self.tau_tel.unwrap_or(f64::INFINITY), self.rho)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalarFile {
    #[serde(default)]
    format_version: Option<u32>,
    scalar_model: ScalarModel,
}

impl MaterialFile {
    pub fn from_material(mat: &MaterialSpec<f64>) -> Self {
        let dims = mat.dims();
        Self {
            format_version: Some(FORMAT_VERSION),
            n_par: dims.n_par,
            n_perp: dims.n_perp,
            rho: mat.rho(),
            c: mat.c().to_nested(),
            d: mat.d().to_nested(),
            e: mat.e().to_nested(),
            friction: mat.friction().to_rows(),
        }
    }

    pub fn build(&self) -> Result<MaterialSpec<f64>, IoError> {
        check_version(self.format_version)?;
        let dims = Dims::new(self.n_par, self.n_perp)?;
        Ok(MaterialSpec::build(
            dims,
            self.rho,
            &self.c,
            &self.d,
            &self.e,
            &self.friction,
            BuildOptions::default(),
        )?)
    }
}

/// Material from a parsed JSON value: either the full tensor form or
/// `{"scalar_model": {"c": .., "tau_tel": .., "rho": ..}}`.
pub fn material_from_value(v: &serde_json::Value) -> Result<MaterialSpec<f64>, IoError> {
    if v.get("scalar_model").is_some() {
        let f: ScalarFile = serde_json::from_value(v.clone())?;
        check_version(f.format_version)?;
        return Ok(f.scalar_model.build()?);
    }
    let f: MaterialFile = serde_json::from_value(v.clone())?;
    f.build()
}

pub fn parse_material(text: &str) -> Result<MaterialSpec<f64>, IoError> {
    material_from_value(&serde_json::from_str(text)?)
}

pub fn material_to_json(mat: &MaterialSpec<f64>) -> String {
    serde_json::to_string_pretty(&MaterialFile::from_material(mat)).expect("material serializes")
}

pub fn read_material(path: &Path) -> Result<MaterialSpec<f64>, IoError> {
    parse_material(&read_text(path)?)
}

pub fn write_material(path: &Path, mat: &MaterialSpec<f64>) -> Result<(), IoError> {
    fs::write(path, material_to_json(mat) + "\n").map_err(file_err(path))
}

pub const DISPERSION_SCALAR_COLUMNS: [&str; 9] = [
    "q",
    "regime",
    "omega1_re",
    "omega1_im",
    "omega2_re",
    "omega2_im",
    "relaxation_time1",
    "relaxation_time2",
    "phase_velocity",
];

/// Leading columns of the anisotropic table; `mode{k}_re`, `mode{k}_im`
/// follow for every field component `k` (phonon before phason).
pub const DISPERSION_ANISO_COLUMNS: [&str; 8] =
    ["point", "q_x", "q_y", "q_z", "branch", "regime", "omega_re", "omega_im"];

pub fn dispersion_aniso_header(n_fields: usize) -> Vec<String> {
    let mut h: Vec<String> = DISPERSION_ANISO_COLUMNS.iter().map(|s| s.to_string()).collect();
    for k in 0..n_fields {
        h.push(format!("mode{k}_re"));
        h.push(format!("mode{k}_im"));
    }
    h
}

pub const ENERGY_COLUMNS: [&str; 9] = [
    "step",
    "t",
    "kinetic",
    "elastic",
    "total",
    "dissipated",
    "work",
    "balance_residual",
    "discrete_energy",
];

/// `step`, `t`, then the solver's probe columns.
pub fn probe_header(columns: &[String]) -> Vec<String> {
    let mut h = vec!["step".to_string(), "t".to_string()];
    h.extend(columns.iter().cloned());
    h
}

/// 17 significant digits; non-finite values as `nan`, `inf`, `-inf`.
/// Negative zero is written as `0`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        format!("{:.16e}", 0.0)
    } else if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn preamble(w: &mut dyn Write, kind: &str, header: &[&str]) -> std::io::Result<()> {
    writeln!(w, "# qcwave format_version={FORMAT_VERSION} kind={kind}")?;
    writeln!(w, "{}", header.join(","))
}

/// One row per `q`: both roots of the scalar dispersion relation.
pub fn write_dispersion_scalar(
    w: &mut dyn Write,
    rows: &[(f64, DispersionRoot<f64>, DispersionRoot<f64>)],
) -> Result<(), IoError> {
    preamble(w, "dispersion_scalar", &DISPERSION_SCALAR_COLUMNS)?;
    for (q, a, b) in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            fmt_num(*q),
            a.regime.as_str(),
            fmt_num(a.omega.re),
            fmt_num(a.omega.im),
            fmt_num(b.omega.re),
            fmt_num(b.omega.im),
            fmt_opt(a.relaxation_time),
            fmt_opt(b.relaxation_time),
            fmt_opt(a.phase_velocity),
        )?;
    }
    Ok(())
}

/// One row per `(path point, tracked branch)`; missing wavevector
/// components are written as zero. `regime` is `propagating` when
/// `|Re ω|` exceeds `1e-9` of the point's largest `|ω|`, else `standing`.
pub fn write_dispersion_aniso(w: &mut dyn Write, table: &SweepTable<f64>) -> Result<(), IoError> {
    let n_fields = table.rows.first().map_or(0, |r| r.mode.len());
    let header = dispersion_aniso_header(n_fields);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    preamble(w, "dispersion_aniso", &header)?;
    let mut scale = std::collections::HashMap::new();
    for r in &table.rows {
        let s = scale.entry(r.point).or_insert(0.0f64);
        *s = s.max(r.omega.norm());
    }
    for r in &table.rows {
        let q = |i: usize| r.q.get(i).copied().unwrap_or(0.0);
        let regime = if r.omega.re.abs() > 1e-9 * scale[&r.point] {
            "propagating"
        } else {
            "standing"
        };
        write!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.point,
            fmt_num(q(0)),
            fmt_num(q(1)),
            fmt_num(q(2)),
            r.branch,
            regime,
            fmt_num(r.omega.re),
            fmt_num(r.omega.im),
        )?;
        for m in &r.mode {
            write!(w, ",{},{}", fmt_num(m.re), fmt_num(m.im))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Wavevector path: one `q` per line, components separated by commas or
/// whitespace. Blank lines and lines starting with `#` are skipped.
pub fn parse_q_path(text: &str) -> Result<Vec<Vec<f64>>, IoError> {
    let mut path = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let q = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| IoError::Format(format!("q path line {}: {e}", n + 1)))?;
        if q.iter().any(|v| !v.is_finite()) {
            return Err(IoError::Format(format!("q path line {}: non-finite component", n + 1)));
        }
        path.push(q);
    }
    if path.is_empty() {
        return Err(IoError::Format("q path is empty".into()));
    }
    Ok(path)
}

pub fn read_q_path(path: &Path) -> Result<Vec<Vec<f64>>, IoError> {
    parse_q_path(&read_text(path)?)
}

pub fn write_probes(w: &mut dyn Write, columns: &[String], samples: &[ProbeSample<f64>]) -> Result<(), IoError> {
    let header = probe_header(columns);
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    preamble(w, "probes", &refs)?;
    for s in samples {
        let mut line = format!("{},{}", s.step, fmt_num(s.t));
        for v in &s.values {
            line.push(',');
            line.push_str(&fmt_num(*v));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn write_energy(w: &mut dyn Write, records: &[EnergyRecord<f64>]) -> Result<(), IoError> {
    preamble(w, "energy", &ENERGY_COLUMNS)?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.step,
            fmt_num(r.t),
            fmt_num(r.kinetic),
            fmt_num(r.elastic),
            fmt_num(r.total),
            fmt_num(r.dissipated),
            fmt_num(r.work),
            fmt_num(r.balance_residual),
            fmt_num(r.discrete_energy),
        )?;
    }
    Ok(())
}

/// Parsed CSV table in the format written above.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub format_version: u32,
    pub kind: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r.get(i)?.parse().ok()).collect()
    }
}

pub fn parse_csv(text: &str) -> Result<CsvTable, IoError> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| IoError::Format("empty CSV".into()))?;
    let meta = first
        .strip_prefix("# qcwave ")
        .ok_or_else(|| IoError::Format("missing '# qcwave' preamble".into()))?;
    let mut version = None;
    let mut kind = String::new();
    for kv in meta.split_whitespace() {
        match kv.split_once('=') {
            Some(("format_version", v)) => version = v.parse().ok(),
            Some(("kind", v)) => kind = v.to_string(),
            _ => {}
        }
    }
    let format_version = version.ok_or_else(|| IoError::Format("missing format_version".into()))?;
    check_version(Some(format_version))?;
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| IoError::Format("missing header row".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let row: Vec<String> = l.split(',').map(str::to_string).collect();
        if row.len() != header.len() {
            return Err(IoError::Format(format!(
                "row {} has {} fields, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok(CsvTable {
        format_version,
        kind,
        header,
        rows,
    })
}

/// Sidecar of one snapshot field file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotMeta {
    pub format_version: u32,
    pub field: String,
    pub step: usize,
    pub time: f64,
    /// Row-major shape: `[n]` in 1D, `[n_y, n_x]` in 2D.
    pub shape: Vec<usize>,
    pub dtype: String,
    pub spacing: f64,
    pub length: f64,
    pub units: String,
}

fn field_units(name: &str) -> &'static str {
    if name.starts_with('u') {
        "m"
    } else {
        "m/s"
    }
}

/// Writes every field of `state` as `snapshot_{step:06}_{field}.f64` plus a
/// `.json` sidecar into `dir`. Returns the data file paths.
pub fn write_snapshot(dir: &Path, step: usize, state: &SimState<f64>, grid: &Grid<f64>) -> Result<Vec<PathBuf>, IoError> {
    let shape = if grid.dim() == 1 {
        vec![grid.n()]
    } else {
        vec![grid.n(), grid.n()]
    };
    let mut paths = Vec::new();
    for (name, data) in state.all_fields() {
        let stem = format!("snapshot_{step:06}_{name}");
        let bin = dir.join(format!("{stem}.f64"));
        let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&bin, bytes).map_err(file_err(&bin))?;
        let meta = SnapshotMeta {
            format_version: FORMAT_VERSION,
            field: name.clone(),
            step,
            time: state.t,
            shape: shape.clone(),
            dtype: "f64le".into(),
            spacing: grid.spacing(),
            length: grid.length(),
            units: field_units(&name).into(),
        };
        let side = dir.join(format!("{stem}.json"));
        fs::write(&side, serde_json::to_string_pretty(&meta)? + "\n").map_err(file_err(&side))?;
        paths.push(bin);
    }
    Ok(paths)
}

/// Reads a snapshot data file and its sidecar.
pub fn read_snapshot(data_path: &Path) -> Result<(SnapshotMeta, Vec<f64>), IoError> {
    let side = data_path.with_extension("json");
    let meta: SnapshotMeta = serde_json::from_str(&read_text(&side)?)?;
    check_version(Some(meta.format_version))?;
    let bytes = fs::read(data_path).map_err(file_err(data_path))?;
    let expected: usize = meta.shape.iter().product::<usize>() * 8;
    if bytes.len() != expected {
        return Err(IoError::Format(format!(
            "{}: {} bytes, sidecar shape needs {expected}",
            data_path.display(),
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((meta, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::scalar::telegraph_dispersion;

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(f64::NAN), "nan");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn scalar_material_shorthand() {
        let m = parse_material(r#"{"scalar_model": {"c": 2.0, "tau_tel": 0.5}}"#).unwrap();
        assert_eq!(m, MaterialSpec::scalar_model(2.0, 0.5, 1.0).unwrap());
        let undamped = parse_material(r#"{"scalar_model": {"c": 1.0}}"#).unwrap();
        assert!(undamped.is_undamped());
    }

    #[test]
    fn unknown_material_key_is_rejected() {
        let err = parse_material(r#"{"scalar_model": {"c": 1.0, "fricton": 2.0}}"#).unwrap_err();
        assert!(err.to_string().contains("fricton"), "{err}");
    }

    #[test]
    fn future_version_is_rejected() {
        let m = MaterialSpec::scalar_model(1.0, 2.0, 1.0).unwrap();
        let mut f = MaterialFile::from_material(&m);
        f.format_version = Some(FORMAT_VERSION + 1);
        let text = serde_json::to_string(&f).unwrap();
        assert!(matches!(parse_material(&text), Err(IoError::Version { .. })));
    }

    #[test]
    fn scalar_csv_layout() {
        let (a, b) = telegraph_dispersion(1.0, 1.0, 2.0).unwrap();
        let mut out = Vec::new();
        write_dispersion_scalar(&mut out, &[(1.0, a, b)]).unwrap();
        let t = parse_csv(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(t.kind, "dispersion_scalar");
        assert_eq!(t.header, DISPERSION_SCALAR_COLUMNS);
        assert_eq!(t.rows[0][1], "propagating");
        assert_eq!(t.column("omega1_im").unwrap(), vec![-0.5]);
    }

    #[test]
    fn ragged_csv_is_an_error() {
        let text = "# qcwave format_version=1 kind=x\na,b\n1,2\n3\n";
        assert!(parse_csv(text).is_err());
        assert!(parse_csv("").is_err());
    }

    #[test]
    fn q_path_accepts_commas_spaces_and_comments() {
        let p = parse_q_path("# path\n0.1, 0.2\n\n0.3 0.4\n").unwrap();
        assert_eq!(p, vec![vec![0.1, 0.2], vec![0.3, 0.4]]);
        assert!(parse_q_path("# nothing\n").is_err());
        assert!(parse_q_path("1.0, x\n").is_err());
    }
}
