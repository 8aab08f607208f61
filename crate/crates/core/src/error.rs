use thiserror::Error;

/// Errors produced by the solver, propagation engine, circuit builder and
/// ensemble statistics. Variants map onto distinct CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no guided TE mode for the given slab parameters")]
    NoGuidedMode,
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("grid mismatch between field and basis/layout")]
    GridMismatch,
    #[error("basis has a single guided mode; beat length undefined")]
    SingleMode,
    #[error("non-finite field detected at z = {z} um (instability)")]
    NonFiniteField { z: f64 },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("degenerate ensemble: intensity-difference rms vanishes at {0}")]
    DegenerateEnsemble(String),
    #[error("missing surface cell at ({0}, {1})")]
    MissingCell(f64, f64),
    #[error("empty correlation surface")]
    EmptySurface,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 config, 3 physics, 4 degenerate
    /// ensemble, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::NoGuidedMode
            | Error::GridTooCoarse(_)
            | Error::GridMismatch
            | Error::SingleMode
            | Error::NonFiniteField { .. }
            | Error::Geometry(_)
            | Error::Calibration(_) => 3,
            Error::DegenerateEnsemble(_) | Error::MissingCell(..) | Error::EmptySurface => 4,
            Error::Io(_) => 1,
        }
    }
}
