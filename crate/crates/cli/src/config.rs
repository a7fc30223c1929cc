//! Problem specifications: where the density comes from, the grid, and
//! solver overrides. Read from `key = value` text or JSON, then merged with
//! command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use ktcy_core::field_io::read_ktcy;
use ktcy_core::presets::{fourier_field, Preset, DEFAULT_A, DEFAULT_B};
use ktcy_core::solver::SolverConfig;
use ktcy_core::{Grid, TorusField};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const DEFAULT_GRID_N: usize = 128;

/// One Fourier term `c cos(2π(kx + ly)) + s sin(2π(kx + ly))`.
pub type FourierTerm = (i64, i64, f64, f64);

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySource {
    Preset { preset: Preset, a: f64, b: f64 },
    Fourier { terms: Vec<FourierTerm> },
    FieldDump { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub density: DensitySource,
    pub grid_n: usize,
    pub solver: SolverConfig,
}

impl ProblemSpec {
    /// Samples the density on the problem grid.
    pub fn density_field(&self) -> Result<TorusField, CliError> {
        let grid = Grid::new(self.grid_n).map_err(|e| CliError::Invalid(e.to_string()))?;
        match &self.density {
            DensitySource::Preset { preset, a, b } => Ok(preset.field(&grid, *a, *b)),
            DensitySource::Fourier { terms } => Ok(fourier_field(&grid, terms)),
            DensitySource::FieldDump { path } => {
                let f = read_ktcy(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
                if f.n() != self.grid_n {
                    return Err(CliError::Invalid(format!(
                        "{}: field has n = {}, problem grid has n = {}",
                        path.display(),
                        f.n(),
                        self.grid_n
                    )));
                }
                Ok(f)
            }
        }
    }
}

/// Settings as they appear in a config file or on the command line; every
/// field optional.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    pub preset: Option<String>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub fourier: Option<Vec<FourierTerm>>,
    pub field: Option<PathBuf>,
    #[serde(alias = "grid_n")]
    pub n: Option<usize>,
    pub newton_tol: Option<f64>,
    pub max_newton_iters: Option<usize>,
    pub armijo_c: Option<f64>,
    pub admissibility_delta: Option<f64>,
    pub t_step_initial: Option<f64>,
    pub t_step_min: Option<f64>,
    pub seed: Option<u64>,
}

impl RawSpec {
    /// Fields set in `over` replace those in `self`.
    pub fn merged(self, over: RawSpec) -> RawSpec {
        RawSpec {
            preset: over.preset.or(self.preset),
            a: over.a.or(self.a),
            b: over.b.or(self.b),
            fourier: over.fourier.or(self.fourier),
            field: over.field.or(self.field),
            n: over.n.or(self.n),
            newton_tol: over.newton_tol.or(self.newton_tol),
            max_newton_iters: over.max_newton_iters.or(self.max_newton_iters),
            armijo_c: over.armijo_c.or(self.armijo_c),
            admissibility_delta: over.admissibility_delta.or(self.admissibility_delta),
            t_step_initial: over.t_step_initial.or(self.t_step_initial),
            t_step_min: over.t_step_min.or(self.t_step_min),
            seed: over.seed.or(self.seed),
        }
    }

    /// Validates and resolves defaults.
    pub fn resolve(self) -> Result<ProblemSpec, CliError> {
        let invalid = |msg: String| Err(CliError::Invalid(msg));
        let sources = [self.preset.is_some(), self.fourier.is_some(), self.field.is_some()];
        let density = match sources {
            [true, false, false] => {
                let preset: Preset = self.preset.unwrap().parse().map_err(|e: ktcy_core::Error| {
                    CliError::Invalid(format!("field 'preset': {e}"))
                })?;
                let (a, b) = (self.a.unwrap_or(DEFAULT_A), self.b.unwrap_or(DEFAULT_B));
                if !a.is_finite() || !b.is_finite() {
                    return invalid("fields 'a', 'b': amplitudes must be finite".into());
                }
                DensitySource::Preset { preset, a, b }
            }
            [false, true, false] => {
                let terms = self.fourier.unwrap();
                validate_fourier(&terms)?;
                if self.a.is_some() || self.b.is_some() {
                    return invalid("fields 'a', 'b' only apply to presets".into());
                }
                DensitySource::Fourier { terms }
            }
            [false, false, true] => DensitySource::FieldDump {
                path: self.field.unwrap(),
            },
            [false, false, false] => {
                return invalid("no density given: set one of 'preset', 'fourier' or 'field'".into())
            }
            _ => return invalid("fields 'preset', 'fourier' and 'field' are mutually exclusive".into()),
        };

        let grid_n = match (&density, self.n) {
            (DensitySource::FieldDump { path }, n) => {
                let file_n = read_ktcy(path)
                    .map_err(|e| CliError::Invalid(format!("field 'field': {}: {e}", path.display())))?
                    .n();
                match n {
                    Some(n) if n != file_n => {
                        return invalid(format!(
                            "field 'n': {n} does not match the grid of {} (n = {file_n})",
                            path.display()
                        ))
                    }
                    _ => file_n,
                }
            }
            (_, n) => n.unwrap_or(DEFAULT_GRID_N),
        };
        Grid::new(grid_n).map_err(|e| CliError::Invalid(format!("field 'n': {e}")))?;

        let d = SolverConfig::default();
        let solver = SolverConfig {
            grid_n,
            newton_tol: self.newton_tol.unwrap_or(d.newton_tol),
            max_newton_iters: self.max_newton_iters.unwrap_or(d.max_newton_iters),
            armijo_c: self.armijo_c.unwrap_or(d.armijo_c),
            admissibility_delta: self.admissibility_delta.unwrap_or(d.admissibility_delta),
            t_step_initial: self.t_step_initial.unwrap_or(d.t_step_initial),
            t_step_min: self.t_step_min.unwrap_or(d.t_step_min),
            seed: self.seed.unwrap_or(d.seed),
        };
        solver.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
        Ok(ProblemSpec {
            density,
            grid_n,
            solver,
        })
    }
}

fn validate_fourier(terms: &[FourierTerm]) -> Result<(), CliError> {
    if terms.is_empty() {
        return Err(CliError::Invalid("field 'fourier': list is empty".into()));
    }
    for (idx, &(k, l, c, s)) in terms.iter().enumerate() {
        if k == 0 && l == 0 {
            return Err(CliError::Invalid(format!(
                "field 'fourier': entry {idx} is the (0, 0) mode; constants are absorbed by the normalization and must not appear in F"
            )));
        }
        if !c.is_finite() || !s.is_finite() {
            return Err(CliError::Invalid(format!("field 'fourier': entry {idx} has a non-finite amplitude")));
        }
    }
    Ok(())
}

/// Parses `k,l,c,s; k,l,c,s; ...`.
pub fn parse_fourier_list(text: &str) -> Result<Vec<FourierTerm>, String> {
    text.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(idx, term)| {
            let parts: Vec<&str> = term.split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(format!("entry {idx} ({term:?}) needs four values k,l,cos,sin"));
            }
            let int = |s: &str| s.parse::<i64>().map_err(|e| format!("entry {idx}: {s:?}: {e}"));
            let real = |s: &str| s.parse::<f64>().map_err(|e| format!("entry {idx}: {s:?}: {e}"));
            Ok((int(parts[0])?, int(parts[1])?, real(parts[2])?, real(parts[3])?))
        })
        .collect()
}

/// Reads a config file, choosing JSON when the content starts with `{`.
pub fn read_config(path: &Path) -> Result<RawSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let parsed = if text.trim_start().starts_with('{') {
        parse_json(&text)
    } else {
        parse_key_value(&text)
    };
    parsed.map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

pub fn parse_json(text: &str) -> Result<RawSpec, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}

const INT_KEYS: [&str; 4] = ["n", "grid_n", "max_newton_iters", "seed"];
const REAL_KEYS: [&str; 7] = ["a", "b", "newton_tol", "armijo_c", "admissibility_delta", "t_step_initial", "t_step_min"];
const STRING_KEYS: [&str; 2] = ["preset", "field"];

/// Parses `key = value` lines. `#` starts a comment.
pub fn parse_key_value(text: &str) -> Result<RawSpec, String> {
    let mut map = Map::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {lineno}: expected 'key = value', got {line:?}"))?;
        let (key, value) = (key.trim(), value.trim());
        let at = |msg: String| format!("line {lineno}, field '{key}': {msg}");
        let json = if INT_KEYS.contains(&key) {
            let v: u64 = value.parse().map_err(|e| at(format!("{value:?} is not a non-negative integer ({e})")))?;
            Value::from(v)
        } else if REAL_KEYS.contains(&key) {
            let v: f64 = value.parse().map_err(|e| at(format!("{value:?} is not a number ({e})")))?;
            if !v.is_finite() {
                return Err(at("value must be finite".into()));
            }
            Value::from(v)
        } else if STRING_KEYS.contains(&key) {
            Value::from(value)
        } else if key == "fourier" {
            let terms = parse_fourier_list(value).map_err(at)?;
            serde_json::to_value(terms).expect("finite terms serialize")
        } else {
            return Err(format!("line {lineno}: unknown field '{key}'"));
        };
        let key = if key == "grid_n" { "n" } else { key };
        if map.insert(key.to_string(), json).is_some() {
            return Err(at("set more than once".into()));
        }
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| e.to_string())
}
