use thiserror::Error;

/// Crate-wide error type. Numeric modules return structured variants so
/// callers can tell a shape bug from a validation failure or bad input file.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: {detail} (node {node})")]
    Shape {
        op: &'static str,
        node: usize,
        detail: String,
    },

    #[error("{op} produced non-finite values (node {node})")]
    NonFinite { op: &'static str, node: usize },

    #[error("backward needs a 1x1 output, node {node} is {rows}x{cols}")]
    NonScalarOutput {
        node: usize,
        rows: usize,
        cols: usize,
    },

    #[error("channel flip probability {0} is outside [0, 0.5]")]
    InvalidEpsilon(f64),

    #[error("transition flipping {flips} bits has probability zero when epsilon = 0")]
    ImpossibleTransition { flips: usize },

    #[error("invalid {name}: {detail}")]
    InvalidArgument { name: &'static str, detail: String },

    #[error("{path} line {line}: {detail}")]
    Config {
        path: String,
        line: usize,
        detail: String,
    },

    #[error("{path}: {detail}")]
    DataFormat { path: String, detail: String },

    #[error("checkpoint {path}: {detail}")]
    Checkpoint { path: String, detail: String },

    #[error("training aborted at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
