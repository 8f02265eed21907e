//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver error, 4 I/O
//! error, 5 failed self-check.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::mechanics::{
    fluxonium_e2m, fluxonium_m2e, transmon_e2m, transmon_m2e, zeropi_e2m, zeropi_m2e, FluxoniumMech, TransmonMech,
    ZeroPiMech,
};
use crate::observables::qubit_report;
use crate::params::{FluxoniumParams, TransmonParams, ZeroPiParams};
use crate::pipeline::{
    apply_override, config_from_value, export_wavefunctions, parse_json, run_sweep, write_csv, Config,
};
use crate::selfcheck::{run_checks, run_checks_with_stencil_side};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_CHECK: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "qubitmech", version, about = "Spectra and mechanical analogs of superconducting qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one parameter point and print its levels and qubit summary.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        /// Number of levels (defaults to the config's `levels`).
        #[arg(long)]
        levels: Option<usize>,
        /// Optional CSV with columns `level,energy`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dotted-key override applied after loading, e.g. `params.phi_ext=3.14`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the sweep described by the config and write CSV plus metadata.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Export wavefunctions of the given levels for plotting.
    Wavefunctions {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated level indices.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
        levels: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Convert between electrical and mechanical parameter sets.
    Map {
        #[arg(long, value_enum)]
        direction: Direction,
        #[arg(long, value_enum)]
        circuit: Circuit,
        /// JSON object with the source parameters (and the length for e2m).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the built-in invariant suite.
    Check {
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Direction {
    E2m,
    M2e,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Circuit {
    Transmon,
    Fluxonium,
    Zeropi,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        e if e.is_config_error() => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

/// Runs the CLI with the process's standard streams.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI, writing reports to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return if code == 0 { EXIT_OK } else { EXIT_CONFIG };
        }
    };
    let result = match cli.command {
        Command::Spectrum { config, levels, out: dest, overrides } => {
            cmd_spectrum(&config, levels, dest.as_deref(), &overrides, out, err)
        }
        Command::Sweep { config, out: dest, overrides } => cmd_sweep(&config, &dest, &overrides, out, err),
        Command::Wavefunctions { config, levels, out: dest, overrides } => {
            cmd_wavefunctions(&config, &levels, &dest, &overrides, out)
        }
        Command::Map { direction, circuit, config, overrides } => {
            cmd_map(direction, circuit, config.as_deref(), &overrides, out)
        }
        Command::Check { inject_fault } => return cmd_check(inject_fault, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error [{}]: {e}", e.code());
            exit_code(&e)
        }
    }
}

fn split_override(s: &str) -> Result<(&str, &str)> {
    s.split_once('=').ok_or_else(|| Error::schema(s, "override must look like key=value"))
}

fn load_document(path: Option<&Path>, overrides: &[String]) -> Result<Value> {
    let mut doc = match path {
        Some(p) => parse_json(&std::fs::read_to_string(p)?)?,
        None => Value::Object(Map::new()),
    };
    for o in overrides {
        let (k, v) = split_override(o)?;
        apply_override(&mut doc, k, v)?;
    }
    Ok(doc)
}

fn load(path: &Path, overrides: &[String]) -> Result<Config> {
    config_from_value(&load_document(Some(path), overrides)?)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.10}")).unwrap_or_else(|| "n/a".to_string())
}

fn cmd_spectrum(
    path: &Path,
    levels: Option<usize>,
    dest: Option<&Path>,
    overrides: &[String],
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let mut config = load(path, overrides)?;
    if let Some(k) = levels {
        if k < 1 {
            return Err(Error::schema("levels", "need at least 1 level"));
        }
        config.levels = k;
    }
    let s = config.solve()?;
    writeln!(out, "circuit: {}", config.params.name())?;
    writeln!(out, "basis: {} (dimension {})", s.basis().name(), s.basis().dim())?;
    for (k, e) in s.energies().iter().enumerate() {
        writeln!(out, "E{k} = {e:.10} GHz")?;
    }
    if s.len() >= 2 {
        let r = qubit_report(&s)?;
        writeln!(out, "f10 = {:.10} GHz", r.f10)?;
        writeln!(out, "f21 = {} GHz", opt(r.f21))?;
        writeln!(out, "anharmonicity = {} GHz", opt(r.anharmonicity))?;
        writeln!(out, "|<0|phi|1>| = {}", opt(r.flux_mat_el))?;
        writeln!(out, "|<0|n|1>| = {}", opt(r.charge_mat_el))?;
        writeln!(out, "disjointness(0,1) = {} (overlap-based)", opt(r.disjointness))?;
    } else {
        writeln!(err, "note: one level requested, no qubit summary")?;
    }
    if let Some(dest) = dest {
        let mut text = String::from("level,energy\n");
        for (k, e) in s.energies().iter().enumerate() {
            text.push_str(&format!("{k},{}\n", crate::pipeline::format_float(*e)));
        }
        std::fs::write(dest, text)?;
    }
    Ok(EXIT_OK)
}

fn cmd_sweep(path: &Path, dest: &Path, overrides: &[String], out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let config = load(path, overrides)?;
    let r = run_sweep(&config)?;
    write_csv(&r, dest)?;
    let failed = r.failures();
    writeln!(out, "{} points written to {}", r.records.len(), dest.display())?;
    if failed == r.records.len() {
        writeln!(err, "error: all {failed} points failed")?;
        return Ok(EXIT_SOLVER);
    }
    if failed > 0 {
        writeln!(err, "warning: {failed} of {} points failed; see the error column", r.records.len())?;
    }
    Ok(EXIT_OK)
}

fn cmd_wavefunctions(
    path: &Path,
    levels: &[usize],
    dest: &Path,
    overrides: &[String],
    out: &mut dyn Write,
) -> Result<i32> {
    let mut config = load(path, overrides)?;
    let need = levels.iter().max().map_or(1, |m| m + 1);
    config.levels = config.levels.max(need);
    let s = config.solve()?;
    let c = export_wavefunctions(&s, &config.params, levels, dest)?;
    writeln!(out, "wrote {} levels to {} (plot scale c = {c:.6})", levels.len(), dest.display())?;
    Ok(EXIT_OK)
}

fn take_length(doc: &mut Value, key: &'static str) -> Result<f64> {
    let map = doc.as_object_mut().ok_or_else(|| Error::schema("", "expected a JSON object"))?;
    let v = map.remove(key).ok_or_else(|| Error::schema(key, "geometry is required for e2m"))?;
    v.as_f64().ok_or_else(|| Error::schema(key, "expected a number"))
}

fn typed<T: serde::de::DeserializeOwned>(doc: Value) -> Result<T> {
    serde_json::from_value(doc).map_err(|e| {
        let msg = e.to_string();
        let field = msg.split('`').nth(1).unwrap_or("").to_string();
        Error::schema(field, msg)
    })
}

fn cmd_map(
    direction: Direction,
    circuit: Circuit,
    path: Option<&Path>,
    overrides: &[String],
    out: &mut dyn Write,
) -> Result<i32> {
    let mut doc = load_document(path, overrides)?;
    let result = match (direction, circuit) {
        (Direction::E2m, Circuit::Transmon) => {
            let l = take_length(&mut doc, "length_l")?;
            serde_json::to_value(transmon_e2m(&typed::<TransmonParams>(doc)?, l)?)
        }
        (Direction::E2m, Circuit::Fluxonium) => {
            let l = take_length(&mut doc, "half_length_l")?;
            serde_json::to_value(fluxonium_e2m(&typed::<FluxoniumParams>(doc)?, l)?)
        }
        (Direction::E2m, Circuit::Zeropi) => {
            let l = take_length(&mut doc, "length_l")?;
            serde_json::to_value(zeropi_e2m(&typed::<ZeroPiParams>(doc)?, l)?)
        }
        (Direction::M2e, Circuit::Transmon) => serde_json::to_value(transmon_m2e(&typed::<TransmonMech>(doc)?)?),
        (Direction::M2e, Circuit::Fluxonium) => serde_json::to_value(fluxonium_m2e(&typed::<FluxoniumMech>(doc)?)?),
        (Direction::M2e, Circuit::Zeropi) => serde_json::to_value(zeropi_m2e(&typed::<ZeroPiMech>(doc)?)?),
    }
    .expect("parameter sets serialize");
    writeln!(out, "{}", serde_json::to_string_pretty(&result).expect("value serializes"))?;
    Ok(EXIT_OK)
}

fn cmd_check(inject_fault: bool, out: &mut dyn Write) -> i32 {
    let report = if inject_fault { run_checks_with_stencil_side(1.001) } else { run_checks() };
    let _ = write!(out, "{}", report.render());
    if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_CHECK
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("qubitmech").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::SingleWell), EXIT_SOLVER);
        assert_eq!(exit_code(&Error::schema("x", "y")), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), EXIT_IO);
    }

    #[test]
    fn map_without_file() {
        let (code, out, _) = run_str(&[
            "map",
            "--direction",
            "e2m",
            "--circuit",
            "transmon",
            "--set",
            "e_c=1",
            "--set",
            "e_j=3",
            "--set",
            "length_l=1",
        ]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["inertia_i"], 0.5);
        assert_eq!(v["k"], 12.0);
    }

    #[test]
    fn map_requires_geometry() {
        let (code, _, err) = run_str(&["map", "--direction", "e2m", "--circuit", "fluxonium", "--set", "e_c=1"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("half_length_l"));
    }

    #[test]
    fn bad_arguments_are_config_errors() {
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_CONFIG);
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
    }
}
