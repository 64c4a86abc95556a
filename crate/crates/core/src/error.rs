use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("kernel singular at t = {t}")]
    Singularity { t: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("grid too coarse: {0}")]
    Resolution(String),

    /// The cap of a wavelet at `scale` around `target` holds fewer nodes than required.
    #[error(
        "under-resolved cap at scale {scale}: target node {target} (colatitude {colatitude_deg:.3} deg) \
         has {found} nodes inside, {required} required"
    )]
    UnderResolved {
        scale: u32,
        target: usize,
        colatitude_deg: f64,
        found: usize,
        required: usize,
    },

    #[error("radial mean {mean:.3e} exceeds tolerance {tolerance:.3e}")]
    RadialMean { mean: f64, tolerance: f64 },

    #[error("{0}")]
    Mismatch(String),

    #[error("I/O failure: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
            _ => Error::Format(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.to_string())
        } else {
            Error::Format(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
