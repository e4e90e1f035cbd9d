use thiserror::Error;

/// Errors produced by the geometry, discretization and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KornError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("patch `{0}` has no embedding")]
    NoEmbedding(String),

    #[error("axis {axis} has {nodes} nodes, at least 3 are required")]
    TooFewNodes { axis: &'static str, nodes: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("shell too thick for this patch: min(1 + t*kappa) = {min_factor:.4} < 0.5")]
    ShellTooThick { min_factor: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("matrix is not skew-symmetric (|B + B^T| = {0:.3e})")]
    NotSkew(f64),

    #[error("grid under-resolves the ansatz: {have} theta nodes, need at least {need} ({per_period} nodes per theta period P*sqrt(h))")]
    UnderResolved { have: usize, need: usize, per_period: usize },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("function not harmonic enough: laplacian residual {residual:.3e} exceeds gate {gate:.3e}")]
    NotHarmonic { residual: f64, gate: f64 },

    #[error("sampling too coarse: half-resolution integrals differ by {0:.2}%")]
    TooCoarse(f64),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear solve broke down: {0}")]
    Breakdown(String),

    #[error("bracket search failed: {0}")]
    Bracket(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for KornError {
    fn from(e: std::io::Error) -> Self {
        KornError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, KornError>;
