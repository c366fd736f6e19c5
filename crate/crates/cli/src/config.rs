//! Run configuration: flag/config-file merging and validation.
//!
//! Config files are flat UTF-8 `key = value` text with `#` comments. Keys
//! mirror the long flag names of the command they are used with; command
//! line flags override file values. Unknown keys are errors so typos never
//! silently fall back to defaults.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use jcmflow_core::{EquationOfState, ModelParams, Truncation, Vec3};

/// Error carrying the process exit status mandated for it.
#[derive(Debug)]
pub enum CliError {
    /// Configuration or validation problem; exit status 1.
    Usage(String),
    /// Numerical failure inside a computation; exit status 2.
    Numerical(String),
    /// Filesystem problem; exit status 1.
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Parsed flat config file.
pub struct FileConfig {
    values: HashMap<String, String>,
    path: Option<PathBuf>,
}

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig { values: HashMap::new(), path: None }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config {}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values, path: Some(path.to_path_buf()) })
    }

    /// Reject keys the current command does not understand.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        for key in self.values.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown config key `{key}`{} (allowed: {})",
                    self.path
                        .as_ref()
                        .map(|p| format!(" in {}", p.display()))
                        .unwrap_or_default(),
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key `{key}` = `{raw}`: {e}"))),
        }
    }
}

/// Flag value, then config-file value, then default.
pub fn resolve<T: FromStr + Clone>(
    flag: Option<T>,
    file: &FileConfig,
    key: &str,
    default: T,
) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    Ok(file.get::<T>(key)?.unwrap_or(default))
}

/// Like [`resolve`] but without a default; `None` means absent.
pub fn resolve_opt<T: FromStr>(
    flag: Option<T>,
    file: &FileConfig,
    key: &str,
) -> Result<Option<T>, CliError>
where
    T::Err: fmt::Display,
{
    if let Some(v) = flag {
        return Ok(Some(v));
    }
    file.get::<T>(key)
}

/// Comma-separated 3-vector, e.g. `1,0,0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VecArg(pub Vec3);

impl FromStr for VecArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(format!("expected three comma-separated numbers, got `{s}`"));
        }
        let mut c = [0.0; 3];
        for (slot, part) in c.iter_mut().zip(&parts) {
            *slot = part
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("bad component `{part}`: {e}"))?;
        }
        Ok(VecArg(Vec3::new(c[0], c[1], c[2])))
    }
}

/// Comma-separated list of times, e.g. `0.5,1.0,1.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimesArg(pub Vec<f64>);

impl FromStr for TimesArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut times = Vec::new();
        for part in s.split(',') {
            times.push(
                part.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad time `{part}`: {e}"))?,
            );
        }
        if times.is_empty() {
            return Err("expected at least one time".into());
        }
        Ok(TimesArg(times))
    }
}

/// Equation-of-state spec: `isothermal:C` or `polytropic:A,GAMMA`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EosArg(pub EquationOfState);

impl FromStr for EosArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "isothermal" => {
                let c = if rest.is_empty() { Ok(1.0) } else { rest.trim().parse::<f64>() }
                    .map_err(|e| format!("bad sound speed `{rest}`: {e}"))?;
                EquationOfState::isothermal(c).map(EosArg).map_err(|e| e.to_string())
            }
            "polytropic" => {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 2 {
                    return Err(format!("polytropic needs `A,GAMMA`, got `{rest}`"));
                }
                let a = parts[0].trim().parse::<f64>().map_err(|e| format!("bad A: {e}"))?;
                let g = parts[1].trim().parse::<f64>().map_err(|e| format!("bad gamma: {e}"))?;
                EquationOfState::polytropic(a, g).map(EosArg).map_err(|e| e.to_string())
            }
            other => Err(format!("unknown equation of state `{other}` (isothermal | polytropic)")),
        }
    }
}

impl fmt::Display for EosArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            EquationOfState::Isothermal { c } => write!(f, "isothermal:{c}"),
            EquationOfState::Polytropic { a, gamma } => write!(f, "polytropic:{a},{gamma}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (csv | json)")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputFormat::Csv => write!(f, "csv"),
            OutputFormat::Json => write!(f, "json"),
        }
    }
}

/// Construct the model parameters from resolved `beta` / `tol` / `n-terms`,
/// validating the module preconditions before dispatch.
pub fn build_params(
    beta: f64,
    tol: f64,
    n_terms: Option<usize>,
) -> Result<ModelParams, CliError> {
    let trunc = match n_terms {
        Some(n) => Truncation::FixedOrder(n),
        None => Truncation::Certified(tol),
    };
    ModelParams::with_truncation(beta, trunc).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn check_state_norm(s0: Vec3) -> Result<(), CliError> {
    let n = s0.norm();
    if !n.is_finite() || n > 1.0 + 1e-12 {
        return Err(CliError::Usage(format!(
            "initial state norm {n} exceeds 1; not a physical Bloch vector"
        )));
    }
    Ok(())
}

pub fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if !v.is_finite() || v <= 0.0 {
        return Err(CliError::Usage(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}
