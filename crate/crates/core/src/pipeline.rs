//! Configuration, parameter sweeps and CSV output.
//!
//! # Config schema
//!
//! ```json
//! {
//!   "circuit": "fluxonium",
//!   "params": { "e_c": 1.0, "e_l": 0.5, "e_j": 8.0, "phi_ext": 3.14159 },
//!   "sweep": { "variable": "phi_ext", "from": 1.5708, "to": 4.7124, "steps": 101 },
//!   "levels": 4,
//!   "basis": { "x_max": 13.0, "n_points": 800 }
//! }
//! ```
//!
//! `circuit` and `params` are required; `sweep` is optional (without it the
//! file describes a single point); `levels` defaults to 4. Parameter keys
//! are those of the circuit's parameter struct. Basis keys per circuit:
//!
//! * transmon: `n_max` (charge basis) or `grid_points` (twisted grid)
//! * fluxonium: `x_max`, `n_points`
//! * zeropi: `n_theta`, `x_max`, `n_phi`
//!
//! Sweep variables are `phi_ext` (all circuits), `n_g` (transmon) and
//! `ej_over_ec` (transmon and fluxonium; sets `e_j = value · e_c`). Unknown
//! keys anywhere are rejected.
//!
//! # CSV
//!
//! Columns `swept_name, swept_value, E0 … E{levels−1}, f10, flux_mat_el,
//! charge_mat_el, disjointness, error`. Floats carry 12 significant digits;
//! a failed point has empty numeric cells and its error code in `error`;
//! observables that do not exist in the basis are left empty. Run metadata
//! goes to `<output>.meta.json`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::eigensolve::{lowest_eigenpairs_default, Spectrum, DENSE_TOL, ITERATIVE_TOL};
use crate::error::{Error, Result};
use crate::observables::qubit_report;
use crate::operators::{
    default_charge_cutoff, default_fluxonium_basis, default_zeropi_basis, fluxonium_hamiltonian, fluxonium_potential,
    transmon_charge_hamiltonian, transmon_potential, transmon_twisted_grid_hamiltonian, zeropi_hamiltonian,
    zeropi_potential, BasisSpec, HermitianOperator,
};
use crate::params::{CircuitParams, FluxoniumParams, TransmonParams, Validate, ZeroPiParams};

pub const DEFAULT_LEVELS: usize = 4;

/// Environment variable capping sweep parallelism (0 or unset = all cores).
pub const THREADS_ENV: &str = "QUBITMECH_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptVariable {
    NG,
    PhiExt,
    EjOverEc,
}

impl SweptVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweptVariable::NG => "n_g",
            SweptVariable::PhiExt => "phi_ext",
            SweptVariable::EjOverEc => "ej_over_ec",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "n_g" => Some(SweptVariable::NG),
            "phi_ext" => Some(SweptVariable::PhiExt),
            "ej_over_ec" => Some(SweptVariable::EjOverEc),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub variable: SweptVariable,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepRange {
    /// `steps` evenly spaced values; the endpoints are exact.
    pub fn values(&self) -> Vec<f64> {
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| if i == last { self.to } else { self.from + (self.to - self.from) * i as f64 / last as f64 })
            .collect()
    }
}

/// Optional basis resolutions; unset fields take the circuit defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BasisOverrides {
    pub n_max: Option<usize>,
    pub grid_points: Option<usize>,
    pub x_max: Option<f64>,
    pub n_points: Option<usize>,
    pub n_theta: Option<usize>,
    pub n_phi: Option<usize>,
}

/// A validated job: a single point, or a sweep when `sweep` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: CircuitParams,
    pub levels: usize,
    pub basis: BasisOverrides,
    pub sweep: Option<SweepRange>,
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse { line: e.line(), column: e.column(), message: e.to_string() }
}

/// Parses JSON text, reporting syntax errors with line and column.
pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(parse_error)
}

/// Parses and validates a config document.
pub fn load_config(text: &str) -> Result<Config> {
    config_from_value(&parse_json(text)?)
}

pub fn load_config_file(path: &Path) -> Result<Config> {
    load_config(&std::fs::read_to_string(path)?)
}

/// Sets a dotted key such as `params.phi_ext` in a config document. The
/// value is read as JSON when possible and as a string otherwise.
pub fn apply_override(doc: &mut Value, key: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::schema(key, "malformed override key"));
    }
    let mut node = doc;
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = node else {
            return Err(Error::schema(parts[..i].join("."), "not an object"));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::schema(path, "expected an object"))
}

fn check_keys(map: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<()> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            let field = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
            return Err(Error::schema(field, format!("unknown field `{key}`")));
        }
    }
    Ok(())
}

fn join(path: &str, key: &str) -> String {
    format!("{path}.{key}")
}

fn req_f64(map: &Map<String, Value>, key: &str, path: &str) -> Result<f64> {
    opt_f64(map, key, path)?.ok_or_else(|| Error::schema(join(path, key), "missing required field"))
}

fn opt_f64(map: &Map<String, Value>, key: &str, path: &str) -> Result<Option<f64>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v.as_f64().map(Some).ok_or_else(|| Error::schema(join(path, key), "expected a number")),
    }
}

fn opt_usize(map: &Map<String, Value>, key: &str, path: &str) -> Result<Option<usize>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|x| Some(x as usize))
            .ok_or_else(|| Error::schema(join(path, key), "expected a non-negative integer")),
    }
}

fn parse_params(circuit: &str, v: &Value) -> Result<CircuitParams> {
    let m = object(v, "params")?;
    let p = "params";
    let params = match circuit {
        "transmon" => {
            check_keys(m, &["e_c", "e_j", "n_g", "phi_ext"], p)?;
            CircuitParams::Transmon(TransmonParams {
                e_c: req_f64(m, "e_c", p)?,
                e_j: req_f64(m, "e_j", p)?,
                n_g: opt_f64(m, "n_g", p)?.unwrap_or(0.0),
                phi_ext: opt_f64(m, "phi_ext", p)?.unwrap_or(0.0),
            })
        }
        "fluxonium" => {
            check_keys(m, &["e_c", "e_l", "e_j", "phi_ext"], p)?;
            CircuitParams::Fluxonium(FluxoniumParams {
                e_c: req_f64(m, "e_c", p)?,
                e_l: req_f64(m, "e_l", p)?,
                e_j: req_f64(m, "e_j", p)?,
                phi_ext: opt_f64(m, "phi_ext", p)?.unwrap_or(0.0),
            })
        }
        "zeropi" => {
            check_keys(m, &["e_c_phi", "e_c_theta", "e_j", "e_l", "phi_ext"], p)?;
            CircuitParams::ZeroPi(ZeroPiParams {
                e_c_phi: req_f64(m, "e_c_phi", p)?,
                e_c_theta: req_f64(m, "e_c_theta", p)?,
                e_j: req_f64(m, "e_j", p)?,
                e_l: req_f64(m, "e_l", p)?,
                phi_ext: opt_f64(m, "phi_ext", p)?.unwrap_or(0.0),
            })
        }
        other => return Err(Error::schema("circuit", format!("unknown circuit `{other}`"))),
    };
    params.validate()
}

fn parse_basis(circuit: &str, v: Option<&Value>) -> Result<BasisOverrides> {
    let Some(v) = v else {
        return Ok(BasisOverrides::default());
    };
    let m = object(v, "basis")?;
    let p = "basis";
    let allowed: &[&str] = match circuit {
        "transmon" => &["n_max", "grid_points"],
        "fluxonium" => &["x_max", "n_points"],
        _ => &["n_theta", "x_max", "n_phi"],
    };
    check_keys(m, allowed, p)?;
    let b = BasisOverrides {
        n_max: opt_usize(m, "n_max", p)?,
        grid_points: opt_usize(m, "grid_points", p)?,
        x_max: opt_f64(m, "x_max", p)?,
        n_points: opt_usize(m, "n_points", p)?,
        n_theta: opt_usize(m, "n_theta", p)?,
        n_phi: opt_usize(m, "n_phi", p)?,
    };
    if b.n_max.is_some() && b.grid_points.is_some() {
        return Err(Error::schema("basis.grid_points", "give either n_max or grid_points, not both"));
    }
    if let Some(x) = b.x_max {
        if !x.is_finite() || x <= 0.0 {
            return Err(Error::schema("basis.x_max", "must be a positive number"));
        }
    }
    Ok(b)
}

fn parse_sweep(circuit: &str, v: Option<&Value>) -> Result<Option<SweepRange>> {
    let Some(v) = v else {
        return Ok(None);
    };
    let m = object(v, "sweep")?;
    let p = "sweep";
    check_keys(m, &["variable", "from", "to", "steps"], p)?;
    let name = m
        .get("variable")
        .ok_or_else(|| Error::schema("sweep.variable", "missing required field"))?
        .as_str()
        .ok_or_else(|| Error::schema("sweep.variable", "expected a string"))?;
    let variable = SweptVariable::parse(name)
        .ok_or_else(|| Error::schema("sweep.variable", format!("unknown sweep variable `{name}`")))?;
    let applicable = match variable {
        SweptVariable::PhiExt => true,
        SweptVariable::NG => circuit == "transmon",
        SweptVariable::EjOverEc => circuit != "zeropi",
    };
    if !applicable {
        return Err(Error::schema("sweep.variable", format!("`{name}` cannot be swept for {circuit}")));
    }
    let from = req_f64(m, "from", p)?;
    let to = req_f64(m, "to", p)?;
    let steps = opt_usize(m, "steps", p)?.ok_or_else(|| Error::schema("sweep.steps", "missing required field"))?;
    if from >= to {
        return Err(Error::schema("sweep.from", format!("from ({from}) must be below to ({to})")));
    }
    if steps < 2 {
        return Err(Error::schema("sweep.steps", "need at least 2 steps"));
    }
    Ok(Some(SweepRange { variable, from, to, steps }))
}

/// Validates a parsed config document.
pub fn config_from_value(doc: &Value) -> Result<Config> {
    let top = object(doc, "")?;
    check_keys(top, &["circuit", "params", "sweep", "levels", "basis"], "")?;
    let circuit = top
        .get("circuit")
        .ok_or_else(|| Error::schema("circuit", "missing required field"))?
        .as_str()
        .ok_or_else(|| Error::schema("circuit", "expected a string"))?;
    let params =
        parse_params(circuit, top.get("params").ok_or_else(|| Error::schema("params", "missing required field"))?)?;
    let levels = match top.get("levels") {
        None => DEFAULT_LEVELS,
        Some(v) => v.as_u64().ok_or_else(|| Error::schema("levels", "expected a positive integer"))? as usize,
    };
    if levels < 2 {
        return Err(Error::schema("levels", "need at least 2 levels"));
    }
    Ok(Config {
        params,
        levels,
        basis: parse_basis(circuit, top.get("basis"))?,
        sweep: parse_sweep(circuit, top.get("sweep"))?,
    })
}

impl Config {
    /// The config as a document in the input schema.
    pub fn to_value(&self) -> Value {
        let mut params = serde_json::to_value(self.params).expect("parameters serialize");
        let circuit = params.as_object_mut().unwrap().remove("circuit").unwrap();
        let mut out = json!({ "circuit": circuit, "params": params, "levels": self.levels });
        let b = self.basis;
        let mut basis = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                basis.insert(k.to_string(), v);
            }
        };
        put("n_max", b.n_max.map(Value::from));
        put("grid_points", b.grid_points.map(Value::from));
        put("x_max", b.x_max.map(Value::from));
        put("n_points", b.n_points.map(Value::from));
        put("n_theta", b.n_theta.map(Value::from));
        put("n_phi", b.n_phi.map(Value::from));
        if !basis.is_empty() {
            out["basis"] = Value::Object(basis);
        }
        if let Some(s) = self.sweep {
            out["sweep"] = json!({ "variable": s.variable.name(), "from": s.from, "to": s.to, "steps": s.steps });
        }
        out
    }

    /// Base parameters with `variable` set to `x`, validated.
    pub fn params_at(&self, variable: SweptVariable, x: f64) -> Result<CircuitParams> {
        let p = match (self.params, variable) {
            (CircuitParams::Transmon(p), SweptVariable::NG) => CircuitParams::Transmon(TransmonParams { n_g: x, ..p }),
            (CircuitParams::Transmon(p), SweptVariable::PhiExt) => {
                CircuitParams::Transmon(TransmonParams { phi_ext: x, ..p })
            }
            (CircuitParams::Transmon(p), SweptVariable::EjOverEc) => {
                CircuitParams::Transmon(TransmonParams { e_j: x * p.e_c, ..p })
            }
            (CircuitParams::Fluxonium(p), SweptVariable::PhiExt) => {
                CircuitParams::Fluxonium(FluxoniumParams { phi_ext: x, ..p })
            }
            (CircuitParams::Fluxonium(p), SweptVariable::EjOverEc) => {
                CircuitParams::Fluxonium(FluxoniumParams { e_j: x * p.e_c, ..p })
            }
            (CircuitParams::ZeroPi(p), SweptVariable::PhiExt) => {
                CircuitParams::ZeroPi(ZeroPiParams { phi_ext: x, ..p })
            }
            (p, v) => {
                return Err(Error::schema(
                    "sweep.variable",
                    format!("`{}` cannot be swept for {}", v.name(), p.name()),
                ));
            }
        };
        p.validate()
    }

    /// Basis for parameters `p` after applying the overrides.
    pub fn basis_for(&self, p: &CircuitParams) -> BasisSpec {
        let b = self.basis;
        match p {
            CircuitParams::Transmon(t) => match b.grid_points {
                Some(n) => BasisSpec::periodic(n, t.n_g),
                None => BasisSpec::charge(b.n_max.unwrap_or_else(|| default_charge_cutoff(t))),
            },
            CircuitParams::Fluxonium(f) => {
                let BasisSpec::BoundedGrid { x_max, n_points } = default_fluxonium_basis(f) else { unreachable!() };
                BasisSpec::bounded(b.x_max.unwrap_or(x_max), b.n_points.unwrap_or(n_points))
            }
            CircuitParams::ZeroPi(z) => {
                let BasisSpec::Product { theta, phi } = default_zeropi_basis(z) else { unreachable!() };
                let n_theta = b.n_theta.unwrap_or(theta.dim());
                let BasisSpec::BoundedGrid { x_max, n_points } = *phi else { unreachable!() };
                BasisSpec::product(
                    BasisSpec::periodic(n_theta, 0.0),
                    BasisSpec::bounded(b.x_max.unwrap_or(x_max), b.n_phi.unwrap_or(n_points)),
                )
            }
        }
    }

    pub fn hamiltonian(&self, p: &CircuitParams) -> Result<HermitianOperator> {
        let basis = self.basis_for(p);
        match (p, &basis) {
            (CircuitParams::Transmon(t), BasisSpec::Charge { n_max }) => transmon_charge_hamiltonian(t, *n_max),
            (CircuitParams::Transmon(t), BasisSpec::PeriodicGrid { n_points, .. }) => {
                transmon_twisted_grid_hamiltonian(t, *n_points)
            }
            (CircuitParams::Fluxonium(f), b) => fluxonium_hamiltonian(f, b),
            (CircuitParams::ZeroPi(z), b) => zeropi_hamiltonian(z, b),
            _ => unreachable!("basis_for returns a transmon basis for transmon parameters"),
        }
    }

    /// Spectrum of `levels` levels at parameters `p`.
    pub fn solve_at(&self, p: &CircuitParams) -> Result<Spectrum> {
        lowest_eigenpairs_default(&self.hamiltonian(p)?, self.levels)
    }

    /// Spectrum at the base parameters.
    pub fn solve(&self) -> Result<Spectrum> {
        self.solve_at(&self.params)
    }
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub swept_value: f64,
    pub energies: Vec<f64>,
    pub f10: Option<f64>,
    pub flux_mat_el: Option<f64>,
    pub charge_mat_el: Option<f64>,
    pub disjointness: Option<f64>,
    /// Error code of a failed point.
    pub error: Option<String>,
}

impl SweepRecord {
    fn failed(swept_value: f64, e: &Error) -> Self {
        SweepRecord {
            swept_value,
            energies: Vec::new(),
            f10: None,
            flux_mat_el: None,
            charge_mat_el: None,
            disjointness: None,
            error: Some(e.code().to_string()),
        }
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub config: Value,
    /// Basis at the base parameters.
    pub basis: BasisSpec,
    pub dense_tol: f64,
    pub iterative_tol: f64,
    pub code_version: String,
    pub disjointness_measure: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub swept_name: String,
    pub levels: usize,
    pub records: Vec<SweepRecord>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.is_error()).count()
    }
}

/// Thread cap from [`THREADS_ENV`]; 0 means no cap.
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

fn solve_record(config: &Config, variable: SweptVariable, x: f64) -> SweepRecord {
    let outcome = config.params_at(variable, x).and_then(|p| {
        let s = config.solve_at(&p)?;
        let r = qubit_report(&s)?;
        Ok((s, r))
    });
    match outcome {
        Ok((s, r)) => SweepRecord {
            swept_value: x,
            energies: s.energies().to_vec(),
            f10: Some(r.f10),
            flux_mat_el: r.flux_mat_el,
            charge_mat_el: r.charge_mat_el,
            disjointness: r.disjointness,
            error: None,
        },
        Err(e) => SweepRecord::failed(x, &e),
    }
}

/// Runs a sweep with the thread cap from the environment.
pub fn run_sweep(config: &Config) -> Result<SweepResult> {
    run_sweep_with_threads(config, threads_from_env())
}

/// Runs a sweep on at most `threads` threads (0 = all cores). Records come
/// back in ascending swept order; failed points become error records.
pub fn run_sweep_with_threads(config: &Config, threads: usize) -> Result<SweepResult> {
    let range = config.sweep.ok_or_else(|| Error::schema("sweep", "config has no sweep section"))?;
    let values = range.values();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    let records: Vec<SweepRecord> =
        pool.install(|| values.par_iter().map(|&x| solve_record(config, range.variable, x)).collect());
    Ok(SweepResult {
        swept_name: range.variable.name().to_string(),
        levels: config.levels,
        records,
        metadata: SweepMetadata {
            config: config.to_value(),
            basis: config.basis_for(&config.params),
            dense_tol: DENSE_TOL,
            iterative_tol: ITERATIVE_TOL,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            disjointness_measure: "overlap-based disjointness".to_string(),
        },
    })
}

/// Float with 12 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.11e}")
}

fn cell(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn header(levels: usize) -> Vec<String> {
    let mut h = vec!["swept_name".to_string(), "swept_value".to_string()];
    h.extend((0..levels).map(|k| format!("E{k}")));
    h.extend(["f10", "flux_mat_el", "charge_mat_el", "disjointness", "error"].map(String::from));
    h
}

/// Writes the CSV body of a sweep.
pub fn write_csv_to<W: Write>(r: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header(r.levels)).map_err(csv_error)?;
    for rec in &r.records {
        let mut row = vec![r.swept_name.clone(), format_float(rec.swept_value)];
        for k in 0..r.levels {
            row.push(cell(rec.energies.get(k).copied()));
        }
        row.extend([rec.f10, rec.flux_mat_el, rec.charge_mat_el, rec.disjointness].map(cell));
        row.push(rec.error.clone().unwrap_or_default());
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numerical(format!("csv: {other:?}")),
    }
}

/// Path of the metadata sidecar for a CSV file.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes the CSV and its `.meta.json` sidecar (which carries the only
/// timestamp).
pub fn write_csv(r: &SweepResult, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    write_csv_to(r, BufWriter::new(file))?;
    let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut meta = serde_json::to_value(&r.metadata).expect("metadata serializes");
    meta["swept_name"] = Value::from(r.swept_name.clone());
    meta["points"] = Value::from(r.records.len());
    meta["failed_points"] = Value::from(r.failures());
    meta["timestamp_unix"] = Value::from(stamp);
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(sidecar_path(path), text + "\n")?;
    Ok(())
}

/// Reads a sweep CSV back into records.
pub fn read_csv<R: Read>(input: R) -> Result<(String, Vec<SweepRecord>)> {
    let mut rd = csv::ReaderBuilder::new().from_reader(input);
    let head = rd.headers().map_err(csv_error)?.clone();
    let levels = head.iter().filter(|h| h.starts_with('E') && h[1..].parse::<usize>().is_ok()).count();
    let num = |s: &str, field: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| Error::schema(field, format!("bad number `{s}`")))
        }
    };
    let mut name = String::new();
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(csv_error)?;
        name = row[0].to_string();
        let mut energies = Vec::new();
        for k in 0..levels {
            if let Some(e) = num(&row[2 + k], "E")? {
                energies.push(e);
            }
        }
        let at = 2 + levels;
        let error = if row[at + 4].is_empty() { None } else { Some(row[at + 4].to_string()) };
        out.push(SweepRecord {
            swept_value: num(&row[1], "swept_value")?.unwrap_or(f64::NAN),
            energies,
            f10: num(&row[at], "f10")?,
            flux_mat_el: num(&row[at + 1], "flux_mat_el")?,
            charge_mat_el: num(&row[at + 2], "charge_mat_el")?,
            disjointness: num(&row[at + 3], "disjointness")?,
            error,
        });
    }
    Ok((name, out))
}

fn potential_at(params: &CircuitParams, coords: (f64, f64)) -> f64 {
    match params {
        CircuitParams::Transmon(p) => transmon_potential(p, coords.1),
        CircuitParams::Fluxonium(p) => fluxonium_potential(p, coords.1),
        CircuitParams::ZeroPi(p) => zeropi_potential(p, coords.0, coords.1),
    }
}

/// Writes wavefunctions for plotting and returns the overlay scale `c`.
///
/// One-dimensional grids produce columns `x, V, psi_k…, plot_k…` with
/// `plot_k = E_k + c·ψ_k`; `c` makes the largest exported amplitude 40% of
/// the mean spacing of the exported levels (1 when that spacing is zero).
/// Product grids produce `theta, phi, V, psi_k…`. `ψ` is the real part of
/// the phase-fixed state, normalized so that `Σ|ψ|²·h = 1`.
pub fn export_wavefunctions_to<W: Write>(
    s: &Spectrum,
    params: &CircuitParams,
    levels: &[usize],
    out: W,
) -> Result<f64> {
    let basis = s.basis();
    if !basis.is_grid() {
        return Err(Error::UnsupportedBasis { op: "export_wavefunctions", basis: basis.name() });
    }
    if let Some(&bad) = levels.iter().find(|&&l| l >= s.len()) {
        return Err(Error::BadLevel { i: bad, j: bad, count: s.len() });
    }
    let coords: Vec<(f64, f64)> = match basis {
        BasisSpec::Product { theta, phi } => {
            let (t, p) = (theta.coordinates(), phi.coordinates());
            t.iter().flat_map(|&a| p.iter().map(move |&b| (a, b))).collect()
        }
        b => b.coordinates().into_iter().map(|x| (0.0, x)).collect(),
    };
    let one_d = !matches!(basis, BasisSpec::Product { .. });
    let amp = levels.iter().flat_map(|&l| s.state(l).iter().map(|z| z.re.abs())).fold(0.0f64, f64::max);
    let e: Vec<f64> = levels.iter().map(|&l| s.energies()[l]).collect();
    let spacing = if e.len() > 1 {
        let (lo, hi) = e.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        (hi - lo) / (e.len() - 1) as f64
    } else {
        0.0
    };
    let c = if spacing > 0.0 && amp > 0.0 { 0.4 * spacing / amp } else { 1.0 };

    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut head: Vec<String> = if one_d { vec!["x".into()] } else { vec!["theta".into(), "phi".into()] };
    head.push("V".into());
    head.extend(levels.iter().map(|l| format!("psi_{l}")));
    if one_d {
        head.extend(levels.iter().map(|l| format!("plot_{l}")));
    }
    w.write_record(&head).map_err(csv_error)?;
    for (k, &(a, b)) in coords.iter().enumerate() {
        let mut row: Vec<String> = if one_d { vec![format_float(b)] } else { vec![format_float(a), format_float(b)] };
        row.push(format_float(potential_at(params, (a, b))));
        row.extend(levels.iter().map(|&l| format_float(s.state(l)[k].re)));
        if one_d {
            row.extend(levels.iter().map(|&l| format_float(s.energies()[l] + c * s.state(l)[k].re)));
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(c)
}

pub fn export_wavefunctions(s: &Spectrum, params: &CircuitParams, levels: &[usize], path: &Path) -> Result<f64> {
    export_wavefunctions_to(s, params, levels, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn fluxonium_doc() -> &'static str {
        r#"{"circuit": "fluxonium", "params": {"e_c": 1.0, "e_l": 0.5, "e_j": 8.0}}"#
    }

    #[test]
    fn minimal_config_fills_defaults_and_round_trips() {
        let c = load_config(fluxonium_doc()).unwrap();
        assert_eq!(c.levels, DEFAULT_LEVELS);
        assert_eq!(c.sweep, None);
        assert_eq!(c.basis, BasisOverrides::default());
        let CircuitParams::Fluxonium(p) = c.params else { panic!() };
        assert_eq!(p.phi_ext, 0.0);
        let again = config_from_value(&c.to_value()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"{"circuit": "zeropi",
            "params": {"e_c_phi": 60, "e_c_theta": 0.02, "e_j": 10, "e_l": 0.02},
            "sweep": {"variable": "phi_ext", "from": 0, "to": 1, "steps": 3},
            "levels": 5, "basis": {"n_theta": 48, "n_phi": 80}}"#;
        let c = load_config(text).unwrap();
        assert_eq!(c.levels, 5);
        assert_eq!(c.basis.n_theta, Some(48));
        assert_eq!(config_from_value(&c.to_value()).unwrap(), c);
    }

    #[test]
    fn unknown_field_is_named() {
        let text = r#"{"circuit": "fluxonium", "params": {"e_cc": 1.0, "e_l": 0.5, "e_j": 8.0}}"#;
        match load_config(text) {
            Err(Error::Schema { field, .. }) => assert!(field.contains("e_cc"), "{field}"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"circuit": "fluxonium", "params": {"e_c": 1, "e_l": 0.5, "e_j": 8}, "extra": 1}"#;
        assert!(matches!(load_config(text), Err(Error::Schema { field, .. }) if field == "extra"));
    }

    #[test]
    fn schema_errors() {
        let bad_range = r#"{"circuit": "transmon", "params": {"e_c": 1, "e_j": 5},
            "sweep": {"variable": "n_g", "from": 1, "to": 0, "steps": 3}}"#;
        assert!(matches!(load_config(bad_range), Err(Error::Schema { .. })));
        let bad_var = r#"{"circuit": "zeropi", "params": {"e_c_phi": 1, "e_c_theta": 1, "e_j": 1, "e_l": 1},
            "sweep": {"variable": "n_g", "from": 0, "to": 1, "steps": 3}}"#;
        assert!(matches!(load_config(bad_var), Err(Error::Schema { field, .. }) if field == "sweep.variable"));
        let missing = r#"{"circuit": "transmon", "params": {"e_c": 1}}"#;
        assert!(matches!(load_config(missing), Err(Error::Schema { field, .. }) if field == "params.e_j"));
        let wrong_basis = r#"{"circuit": "transmon", "params": {"e_c": 1, "e_j": 1}, "basis": {"x_max": 3}}"#;
        assert!(matches!(load_config(wrong_basis), Err(Error::Schema { .. })));
        let neg = r#"{"circuit": "fluxonium", "params": {"e_c": 1, "e_l": -0.5, "e_j": 8}}"#;
        assert!(matches!(load_config(neg), Err(Error::NonPositiveEnergy { field: "e_l", .. })));
    }

    #[test]
    fn parse_error_has_position() {
        match load_config("{\n  \"circuit\": \"transmon\",\n  oops\n}") {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_apply_after_parse() {
        let mut doc = parse_json(fluxonium_doc()).unwrap();
        apply_override(&mut doc, "params.phi_ext", "3.0").unwrap();
        apply_override(&mut doc, "levels", "6").unwrap();
        apply_override(&mut doc, "basis.n_points", "400").unwrap();
        let c = config_from_value(&doc).unwrap();
        let CircuitParams::Fluxonium(p) = c.params else { panic!() };
        assert_eq!(p.phi_ext, 3.0);
        assert_eq!(c.levels, 6);
        assert_eq!(c.basis.n_points, Some(400));
        assert!(apply_override(&mut doc, "circuit.x", "1").is_err());
    }

    fn transmon_sweep(steps: usize) -> Config {
        load_config(&format!(
            r#"{{"circuit": "transmon", "params": {{"e_c": 1, "e_j": 50}},
                "sweep": {{"variable": "n_g", "from": 0, "to": 1, "steps": {steps}}}, "levels": 3}}"#
        ))
        .unwrap()
    }

    #[test]
    fn transmon_offset_charge_sweep_is_flat() {
        let r = run_sweep_with_threads(&transmon_sweep(11), 2).unwrap();
        assert_eq!(r.records.len(), 11);
        let e0: Vec<f64> = r.records.iter().map(|x| x.energies[0]).collect();
        let (lo, hi) = e0.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi - lo <= 1e-4);
        assert!(r.records.windows(2).all(|w| w[0].swept_value < w[1].swept_value));
        for rec in &r.records {
            assert!(rec.energies.windows(2).all(|w| w[0] <= w[1]));
            assert!(rec.flux_mat_el.is_none() && rec.charge_mat_el.is_some());
        }
    }

    #[test]
    fn two_step_sweep_hits_endpoints() {
        let r = run_sweep_with_threads(&transmon_sweep(2), 1).unwrap();
        assert_eq!(r.records.iter().map(|x| x.swept_value).collect::<Vec<_>>(), vec![0.0, 1.0]);
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let mut r = run_sweep_with_threads(&transmon_sweep(3), 1).unwrap();
        r.records[1] = SweepRecord::failed(0.5, &Error::NoConvergence { restarts: 3, residual: 1.0 });
        let mut buf = Vec::new();
        write_csv_to(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(!text.contains('\r'));
        assert_eq!(lines[0], "swept_name,swept_value,E0,E1,E2,f10,flux_mat_el,charge_mat_el,disjointness,error");
        assert_eq!(lines[2], "n_g,5.00000000000e-1,,,,,,,,NoConvergence");
        let (name, back) = read_csv(&buf[..]).unwrap();
        assert_eq!(name, "n_g");
        for (a, b) in r.records.iter().zip(&back) {
            assert_eq!(a.error, b.error);
            let close = |x: f64, y: f64| (x - y).abs() <= 5e-12 * x.abs().max(y.abs());
            assert!(close(a.swept_value, b.swept_value) || a.swept_value == b.swept_value);
            for (x, y) in a.energies.iter().zip(&b.energies) {
                assert!(close(*x, *y));
            }
            assert_eq!(a.f10.is_some(), b.f10.is_some());
            if let (Some(x), Some(y)) = (a.f10, b.f10) {
                assert!(close(x, y));
            }
        }
    }

    #[test]
    fn csv_writer_reports_sidecar() {
        let r = run_sweep_with_threads(&transmon_sweep(2), 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_csv(&r, &path).unwrap();
        let meta: Value = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(meta["points"], 2);
        assert!(meta["timestamp_unix"].as_u64().is_some());
        assert!(write_csv(&r, &dir.path().join("missing/out.csv")).is_err());
    }

    #[test]
    fn sweep_is_independent_of_thread_count() {
        let c = transmon_sweep(7);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv_to(&run_sweep_with_threads(&c, 1).unwrap(), &mut a).unwrap();
        write_csv_to(&run_sweep_with_threads(&c, 4).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn harmonic_wavefunction_export() {
        let c = load_config(
            r#"{"circuit": "fluxonium", "params": {"e_c": 1, "e_l": 1, "e_j": 0}, "basis": {"n_points": 401}}"#,
        )
        .unwrap();
        let s = c.solve().unwrap();
        let mut buf = Vec::new();
        let scale = export_wavefunctions_to(&s, &c.params, &[0, 1], &mut buf).unwrap();
        assert!(scale > 0.0);
        let mut rd = csv::Reader::from_reader(&buf[..]);
        assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), ["x", "V", "psi_0", "psi_1", "plot_0", "plot_1"]);
        let rows: Vec<Vec<f64>> =
            rd.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
        let peak = rows.iter().max_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
        assert!(peak[0].abs() < 1e-12, "peak at {}", peak[0]);
        assert!(peak[1].abs() < 1e-12);
        let charge = load_config(r#"{"circuit": "transmon", "params": {"e_c": 1, "e_j": 1}}"#).unwrap();
        let s = charge.solve().unwrap();
        assert!(matches!(
            export_wavefunctions_to(&s, &charge.params, &[0], Vec::new()),
            Err(Error::UnsupportedBasis { .. })
        ));
    }

    #[test]
    fn separated_wells_in_export() {
        let c = load_config(&format!(
            r#"{{"circuit": "fluxonium", "params": {{"e_c": 1, "e_l": 0.5, "e_j": 8, "phi_ext": {}}}}}"#,
            0.75 * PI
        ))
        .unwrap();
        let s = c.solve().unwrap();
        let x = s.basis().coordinates();
        let argmax = |l: usize| {
            let v = s.state(l);
            (0..v.len()).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap()
        };
        let (a, b) = (x[argmax(0)], x[argmax(1)]);
        assert!((a - b).abs() > PI, "{a} {b}");
    }
}
