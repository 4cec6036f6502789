use thiserror::Error;

/// Errors produced by the simulator core.
#[derive(Debug, Error)]
pub enum CnsError {
    /// Grid parameters violate a structural constraint.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Two fields do not share a compatible grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Input array dimensions do not match the grid.
    #[error("dimension mismatch: expected {expected}x{expected}, got {got_rows}x{got_cols}")]
    DimensionMismatch {
        expected: usize,
        got_rows: usize,
        got_cols: usize,
    },

    /// A projection cutoff exceeds the stored cutoff.
    #[error("cutoff {requested} exceeds stored Galerkin cutoff {stored}")]
    CutoffExceeded { requested: usize, stored: usize },

    /// Parameter outside its admissible range.
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// Initial data violates the positivity assumption.
    #[error("initial {field} must be positive; minimum over the grid is {minimum}")]
    NonPositiveInitialData { field: &'static str, minimum: f64 },

    /// A non-finite value appeared during time stepping.
    #[error("non-finite value in {field} at t = {t}")]
    NonFinite { field: &'static str, t: f64 },

    /// Checkpoint payload cannot be decoded.
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    /// Checkpoint version is not supported.
    #[error("checkpoint version {found} not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    /// A diagnostic was asked to run on unusable data.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}
