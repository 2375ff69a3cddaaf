//! Run configuration as a TOML document.
//!
//! Keys carry their units (`*_um`, `*_K`, `*_A`, `*_ohm`). Every key is
//! optional except that the result must validate; anything not listed in
//! [`RunConfig::default`] is rejected.

use std::path::PathBuf;

use cavityflow::geometry::DeviceParams;
use cavityflow::solver::SolverConfig;
use cavityflow::sweep::{Drive, Resolution, SweepError, SweepPlan};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`{key}` out of range: {reason}")]
    OutOfRange { key: String, reason: String },
    #[error("could not read {path}: {message}")]
    Read { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldFormat {
    Vtk,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
    Trace,
}

impl LogLevel {
    pub fn as_filter(self) -> &'static str {
        match self {
            Self::Error => "error",
            Self::Warn => "warn",
            Self::Info => "info",
            Self::Debug => "debug",
            Self::Trace => "trace",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub plan: SweepPlan,
    pub output_dir: PathBuf,
    pub emit_fields: bool,
    pub field_formats: Vec<FieldFormat>,
    pub log_level: LogLevel,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            plan: SweepPlan::default(),
            output_dir: PathBuf::from("cavityflow-out"),
            emit_fields: false,
            field_formats: vec![FieldFormat::Vtk, FieldFormat::Csv],
            log_level: LogLevel::Info,
        }
    }
}

/// The document layout. `device` omits the gap height, which is swept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Document {
    gap_heights_um: Vec<f64>,
    #[serde(rename = "ambient_temperatures_K")]
    ambient_temperatures_k: Vec<f64>,
    #[serde(rename = "i_rms_A")]
    i_rms_a: f64,
    resistance_ohm: f64,
    epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    arm_scale_um: Option<f64>,
    threads: usize,
    output_dir: PathBuf,
    emit_fields: bool,
    field_formats: Vec<FieldFormat>,
    log_level: LogLevel,
    resolution: Resolution,
    device: DeviceParams,
    solver: SolverConfig,
}

impl Default for Document {
    fn default() -> Self {
        Self::from(&RunConfig::default())
    }
}

impl From<&RunConfig> for Document {
    fn from(c: &RunConfig) -> Self {
        let p = &c.plan;
        Self {
            gap_heights_um: p.gap_heights_um.clone(),
            ambient_temperatures_k: p.ambient_temperatures_k.clone(),
            i_rms_a: p.drive.i_rms_a,
            resistance_ohm: p.drive.resistance_ohm,
            epsilon: p.epsilon,
            arm_scale_um: p.arm_scale_um,
            threads: p.threads,
            output_dir: c.output_dir.clone(),
            emit_fields: c.emit_fields,
            field_formats: c.field_formats.clone(),
            log_level: c.log_level,
            resolution: p.resolution,
            device: p.device.clone(),
            solver: p.solver.clone(),
        }
    }
}

impl From<Document> for RunConfig {
    fn from(d: Document) -> Self {
        Self {
            plan: SweepPlan {
                gap_heights_um: d.gap_heights_um,
                ambient_temperatures_k: d.ambient_temperatures_k,
                device: d.device,
                resolution: d.resolution,
                solver: d.solver,
                drive: Drive { i_rms_a: d.i_rms_a, resistance_ohm: d.resistance_ohm },
                epsilon: d.epsilon,
                arm_scale_um: d.arm_scale_um,
                threads: d.threads,
            },
            output_dir: d.output_dir,
            emit_fields: d.emit_fields,
            field_formats: d.field_formats,
            log_level: d.log_level,
        }
    }
}

const SWEPT_DEVICE_KEY: &str = "gap_height_um";

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn parse_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
    ConfigError::Parse { line, column, message: e.message().to_string() }
}

/// Report the first key of `doc` that has no counterpart in `known`.
fn find_unknown(doc: &Table, known: &Table, prefix: &str) -> Option<String> {
    for (key, value) in doc {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match known.get(key) {
            None => return Some(path),
            Some(Value::Table(inner)) => {
                if let Value::Table(given) = value {
                    if let Some(found) = find_unknown(given, inner, &path) {
                        return Some(found);
                    }
                }
            }
            Some(_) => {}
        }
    }
    None
}

fn known_keys() -> Table {
    let doc = Document { arm_scale_um: Some(1.0), ..Document::default() };
    let mut table = Table::try_from(&doc).expect("defaults serialize");
    if let Some(Value::Table(device)) = table.get_mut("device") {
        device.remove(SWEPT_DEVICE_KEY);
    }
    table
}

fn out_of_range(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::OutOfRange { key: key.to_string(), reason: reason.into() }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.field_formats.is_empty() {
            return Err(out_of_range("field_formats", "at least one format is required"));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(out_of_range("output_dir", "must not be empty"));
        }
        self.plan.validate().map_err(|e| match e {
            SweepError::InvalidPlan { key, reason } => out_of_range(key, reason),
            other => out_of_range("plan", other.to_string()),
        })
    }

    /// The complete configuration as a document that [`parse_config`] accepts.
    pub fn effective_config(&self) -> String {
        let mut table = Table::try_from(Document::from(self)).expect("configuration serializes");
        if let Some(Value::Table(device)) = table.get_mut("device") {
            device.remove(SWEPT_DEVICE_KEY);
        }
        toml::to_string(&table).expect("table serializes")
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    // Syntax first, so duplicate keys and malformed values carry a line.
    let table: Table = text.parse().map_err(|e: toml::de::Error| parse_error(text, &e))?;
    if let Some(key) = find_unknown(&table, &known_keys(), "") {
        return Err(ConfigError::UnknownKey(key));
    }
    let doc: Document = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    let config = RunConfig::from(doc);
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.display().to_string(), message: e.to_string() })?;
    parse_config(&text)
}
