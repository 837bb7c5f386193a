use std::path::PathBuf;

use crate::topology::Violation;

/// Errors produced anywhere in the link, noise, analysis and key-rate pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid quantity {what}: {value}")]
    InvalidQuantity { what: &'static str, value: f64 },

    #[error("invalid topology: {}", join_violations(.0))]
    InvalidTopology(Vec<Violation>),

    #[error("wavelength {0} nm is not a classical channel")]
    WrongChannel(f64),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    /// A measured multiplier the model cannot produce for this splitting ratio.
    #[error("multiplier K = {k} is outside the model range (1, {n}]")]
    OutOfModel { k: f64, n: u32 },

    #[error("invalid decoy parameters: {0}")]
    InvalidParams(String),

    #[error("background yield {y0} per gate saturates the detector")]
    Saturation { y0: f64 },

    #[error("reference table mismatch, missing cells: {}", .missing.join(", "))]
    ReferenceMismatch { missing: Vec<String> },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
