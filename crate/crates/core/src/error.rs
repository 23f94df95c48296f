use thiserror::Error;

use crate::metrics::Violation;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{name} = {value} out of range {range}")]
    OutOfRange { name: &'static str, value: i64, range: String },

    #[error("incompatible length: {0}")]
    Length(String),

    #[error("switching instants off the sample grid: {0}")]
    OffGrid(String),

    #[error("harmonic window too small: {0}")]
    Window(String),

    #[error("design constraints violated: {}", format_violations(.0))]
    Constraints(Vec<Violation>),

    #[error("malformed waveform file: {0}")]
    Format(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_index(name: &'static str, value: i64, upper: i64) -> Result<()> {
    if value < 0 || value >= upper {
        return Err(Error::OutOfRange { name, value, range: format!("[0, {upper})") });
    }
    Ok(())
}
