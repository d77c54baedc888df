use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular matrix: pivot {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("invalid beam parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    #[error("transfer function evaluation failed at {freq_hz} Hz: {source}")]
    SampleFailed {
        freq_hz: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid frequency data: {0}")]
    InvalidData(String),

    #[error("inconsistent conjugate data at node {node}: H(conj s) differs from conj H(s) by {mismatch:.3e}")]
    InconsistentConjugate { node: String, mismatch: f64 },

    #[error("left node {left} coincides with right node {right}")]
    NodeCollision { left: usize, right: usize },

    #[error("imaginary residue {residue:.3e} after realification exceeds tolerance")]
    ImaginaryResidue { residue: f64 },

    #[error("order {order} rejected: reduced E has condition estimate {cond:.3e}")]
    OverTruncation { order: usize, cond: f64 },
}
