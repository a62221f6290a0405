use std::path::PathBuf;

use crate::instance::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed document. `context` carries serde's line/column and field diagnostics.
    #[error("parse error in {what}: {context}")]
    Parse { what: String, context: String },

    #[error("invalid instance: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("link {link} has no domain assignment")]
    MissingAssignment { link: usize },

    #[error("link {link} assigned to domain {domain}, domains must be numbered from 1")]
    InvalidDomain { link: usize, domain: usize },

    #[error("partition covers {got} links but the instance has {expected}")]
    PartitionSize { expected: usize, got: usize },

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested configuration is outside the method's domain of validity.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("proximal root finder did not converge for v={v}, lambda={lambda}")]
    ProxDiverged { v: f64, lambda: f64 },

    #[error("polyhedral projection stopped after {iterations} cycles with residual {residual:e}")]
    ProjectionCap {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("solver did not converge within {iterations} iterations (primal {primal:e}, dual {dual:e})")]
    NotConverged { iterations: usize, primal: f64, dual: f64 },

    #[error("protocol error in round {round}: domain {to} expected a message for route {route} from domain {from}")]
    Protocol {
        round: usize,
        route: usize,
        from: usize,
        to: usize,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
