use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// A configuration value violates a structural constraint.
    #[error("invalid parameter `{name}`: {detail}")]
    Parameter { name: &'static str, detail: String },

    /// An iterative solver exhausted its iteration budget.
    #[error("{routine} failed to converge: {detail}")]
    Convergence {
        routine: &'static str,
        detail: String,
    },

    /// An integrand produced a non-finite value at a quadrature node.
    #[error("integrand returned {value} at node x = {node}")]
    NonFiniteIntegrand { node: f64, value: f64 },

    /// Text input could not be decoded.
    #[error("parse error on line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }

    pub(crate) fn parameter(name: &'static str, detail: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            detail: detail.into(),
        }
    }

    pub(crate) fn convergence(routine: &'static str, detail: impl Into<String>) -> Self {
        Error::Convergence {
            routine,
            detail: detail.into(),
        }
    }
}
