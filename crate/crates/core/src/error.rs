use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violates the invariants of a configuration type.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} {value} outside the admissible range {lo}..={hi}")]
    OutOfRange {
        what: &'static str,
        value: i64,
        lo: i64,
        hi: i64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    /// The setup cannot support the requested computation (e.g. the detector
    /// spans less than one fringe period).
    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("too few samples for a statistically valid estimate: {got} < {required}")]
    StatisticalValidity { got: usize, required: usize },

    #[error(
        "quadrature did not converge on [{lo}, {hi}]: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions"
    )]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("normal equations are rank deficient (rank {rank} < {params} parameters)")]
    RankDeficient { rank: usize, params: usize },

    #[error("no convergence within {iterations} iterations; last iterate {last:?}")]
    IterationLimit { iterations: usize, last: Vec<f64> },

    #[error("range initialization failed: {0}")]
    Initialization(String),

    #[error("grid cell (N={n}, m={m}): {source}")]
    GridCell {
        n: usize,
        m: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("campaign failed: {failed} of {trials} trials did not produce an estimate")]
    Campaign { failed: usize, trials: usize },

    #[error("malformed count map: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Quadrature { .. }
            | Error::RankDeficient { .. }
            | Error::IterationLimit { .. }
            | Error::Initialization(_)
            | Error::Campaign { .. } => true,
            Error::GridCell { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
