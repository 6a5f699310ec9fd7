//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by geometry, deployment, and localization routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown scenario id: {0}")]
    UnknownScenario(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("endpoint not in free space")]
    EndpointNotFree,

    #[error("undeployable scenario: no connected layout after {attempts} attempts")]
    Undeployable { attempts: usize },

    #[error("invalid deployment parameters: {0}")]
    InvalidDeployment(String),

    #[error("not a one-hop link: nodes {0} and {1}")]
    NotOneHop(usize, usize),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("degenerate occurrence profile: all TS values identical")]
    DegenerateOccurrences,

    #[error("no reference triple in sub-network {0}")]
    NoReferenceTriple(usize),

    #[error("inconsistent trilateration: residual {residual} exceeds tolerance {tolerance}")]
    InconsistentTrilateration { residual: f64, tolerance: f64 },

    #[error("collinear known positions")]
    CollinearKnowns,

    #[error("no intersection between ranging circles")]
    NoCircleIntersection,

    #[error("invalid arc query: {0}")]
    InvalidArc(String),

    #[error("uncalibratable subnet {0}: fewer than 3 usable anchors or collinear")]
    Uncalibratable(usize),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
