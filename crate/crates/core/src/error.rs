use thiserror::Error;

/// Errors raised by coefficient generation, operator assembly and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WsldError {
    #[error("unsupported order nu={0}; expected {1}")]
    InvalidNu(u32, &'static str),

    #[error("invalid shifts: {0}")]
    InvalidShifts(String),

    #[error("grid with N_x={nx} is too small for stencil reach m={m}")]
    GridTooSmall { nx: usize, m: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("imaginary residue {residue:e} at index {index} exceeds tolerance")]
    ImaginaryResidue { index: usize, residue: f64 },

    #[error("coefficient series too short: need {need}, have {have}")]
    SeriesTooShort { need: usize, have: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("instability detected: |U|_inf = {norm:e} at step {step}")]
    Instability { step: usize, norm: f64 },

    #[error("eigensolver did not converge")]
    EigenNoConvergence,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, WsldError>;
