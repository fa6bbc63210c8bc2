use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter was outside the range an operation accepts.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("generation {gen} cannot be refined: sequence depth is {max_depth}")]
    DepthExhausted { gen: usize, max_depth: usize },

    #[error("pile choice stream exhausted at generation {gen}, string {string}")]
    StreamExhausted { gen: usize, string: usize },

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("curve {index} meets the cover in length {length}, below the required {required}")]
    CoverageViolated {
        index: usize,
        length: f64,
        required: f64,
    },

    #[error(
        "solver did not converge after {iterations} iterations \
         (best value {value}, dual bound {dual_bound})"
    )]
    NonConvergence {
        iterations: usize,
        value: f64,
        dual_bound: f64,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
