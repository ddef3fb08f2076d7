//! Batch runner behind the `auctionkit` binary: scenario configs in,
//! summary tables and CSVs out.

pub mod builtins;
pub mod config;
pub mod report;
pub mod run;

use std::fmt;
use std::path::{Path, PathBuf};

pub use config::{Analysis, Overrides, Scenario, ScenarioConfig};
pub use report::{emit, summary_text, ReportBundle};
pub use run::run_scenario;

/// Exit codes of the binary.
pub const EXIT_PASS: u8 = 0;
pub const EXIT_BOUND_FAILURE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Config { line: Option<usize>, key: Option<String>, message: String },
    Analysis(auctionkit::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Analysis(auctionkit::Error::Budget(_)) => EXIT_BUDGET,
            _ => EXIT_INPUT,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config { line, key, message } => {
                f.write_str("config error")?;
                if let Some(l) = line {
                    write!(f, " at line {l}")?;
                }
                if let Some(k) = key {
                    write!(f, " ({k})")?;
                }
                write!(f, ": {message}")
            }
            Self::Analysis(e) => write!(f, "{e}"),
            Self::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<auctionkit::Error> for CliError {
    fn from(e: auctionkit::Error) -> Self {
        Self::Analysis(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// Reads a config from a path, or from the built-in set for
/// `builtin:<name>`.
pub fn load(arg: &str) -> Result<String, CliError> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return builtins::builtin(name).map(str::to_string).ok_or_else(|| CliError::Config {
            line: None,
            key: None,
            message: format!("no built-in scenario `{name}`; known: {}", builtins::names().collect::<Vec<_>>().join(", ")),
        });
    }
    std::fs::read_to_string(arg).map_err(|e| CliError::Io(format!("{arg}: {e}")))
}

/// Parses and validates one config text, optionally restricting it to
/// `only` analyses.
pub fn prepare(text: &str, overrides: Overrides, only: Option<&[Analysis]>) -> Result<Scenario, CliError> {
    let mut cfg = ScenarioConfig::parse(text)?;
    if let Some(only) = only {
        cfg.analyses = only.to_vec();
    }
    cfg.validate(Some(text), overrides)
}

/// Output directory of one scenario: `base/<name>`, where `base` is the
/// command-line directory, else the config's, else `default`.
pub fn scenario_dir(cli: Option<&Path>, scenario: &Scenario, default: &Path) -> PathBuf {
    let base = cli.map(Path::to_path_buf).or_else(|| scenario.out.as_ref().map(PathBuf::from)).unwrap_or_else(|| default.to_path_buf());
    base.join(&scenario.name)
}

/// Exit code for a finished batch: input errors first, then budget
/// errors, then failed rows.
pub fn exit_code(bundles: &[ReportBundle]) -> u8 {
    let codes: Vec<u8> = bundles.iter().filter_map(|b| b.error.as_ref().map(CliError::exit_code)).collect();
    if codes.contains(&EXIT_INPUT) {
        EXIT_INPUT
    } else if codes.contains(&EXIT_BUDGET) {
        EXIT_BUDGET
    } else if bundles.iter().all(ReportBundle::passed) {
        EXIT_PASS
    } else {
        EXIT_BOUND_FAILURE
    }
}
