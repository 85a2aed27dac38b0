pub mod budget;
pub mod e2e;
pub mod purify;
pub mod qcs;
pub mod twirl_check;

use std::fmt;
use std::path::PathBuf;

use serde::de::DeserializeOwned;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Refusal(String),
    Internal(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration: {m}"),
            CliError::Refusal(m) => write!(f, "precondition refused: {m}"),
            CliError::Internal(m) => write!(f, "internal invariant failure: {m}"),
        }
    }
}

/// Loads the optional config file.  Unknown keys are rejected by the
/// per-command deserializers.
pub fn load_config<P: DeserializeOwned + Default>(
    path: &Option<PathBuf>,
) -> Result<P, CliError> {
    match path {
        None => Ok(P::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("bad config {}: {e}", p.display())))
        }
    }
}

/// Accepts `1e5`-style floats for pair counts and validates integrality.
pub fn parse_count(x: f64, what: &str) -> Result<u64, CliError> {
    if !x.is_finite() || !(1.0..=1e18).contains(&x) || x.fract() != 0.0 {
        return Err(CliError::Config(format!(
            "{what} must be a positive integer (scientific notation allowed), got {x}"
        )));
    }
    Ok(x as u64)
}

pub fn parse_count_flag(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| e.to_string())
}

impl From<qcsync_core::harness::HarnessError> for CliError {
    fn from(e: qcsync_core::harness::HarnessError) -> Self {
        use qcsync_core::harness::HarnessError as H;
        match e {
            H::Config(m) => CliError::Config(m),
            H::Refusal(m) => CliError::Refusal(m),
            H::Exhausted(n) => CliError::Refusal(format!("ensemble exhausted ({n} pairs left)")),
            H::ProtocolOrder(m) | H::Internal(m) => CliError::Internal(m),
        }
    }
}

impl From<qcsync_core::qcs::QcsError> for CliError {
    fn from(e: qcsync_core::qcs::QcsError) -> Self {
        use qcsync_core::qcs::QcsError as Q;
        match e {
            Q::BadConfig(m) => CliError::Config(m),
            Q::TooManyPairs { .. } => CliError::Config(e.to_string()),
            Q::InsufficientPairs { .. } => CliError::Refusal(e.to_string()),
            Q::Purify(p) => CliError::from(p),
        }
    }
}

impl From<qcsync_core::purify::PurifyError> for CliError {
    fn from(e: qcsync_core::purify::PurifyError) -> Self {
        use qcsync_core::purify::PurifyError as P;
        match e {
            P::BadFidelity(_) | P::BadCount(_) | P::InvalidPair(_) => {
                CliError::Config(e.to_string())
            }
            P::Exhausted { .. } => CliError::Refusal(e.to_string()),
            P::Qmath(_) | P::Channel(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io: {e}"))
    }
}
