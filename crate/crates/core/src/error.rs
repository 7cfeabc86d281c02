use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("requested accuracy {requested:e} not met (estimated error {achieved:e})")]
    AccuracyNotMet { achieved: f64, requested: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("grid spacing {h} does not resolve the required scale (need h <= {required})")]
    Resolution { h: f64, required: f64 },

    #[error("no convergence after {iterations} iterations (best value {best})")]
    NonConvergence { best: f64, iterations: usize },

    #[error(
        "certification failed at delta={delta}, x=({}, {}), species ({s}, {t}): ratio {ratio}",
        x[0], x[1]
    )]
    CertificationFailed {
        delta: f64,
        x: [f64; 2],
        s: usize,
        t: usize,
        ratio: f64,
    },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
