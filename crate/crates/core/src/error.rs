use thiserror::Error;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// The input description is malformed or violates an invariant.
    Validation,
    /// The input is well formed but the requested quantity does not exist
    /// numerically (instability, singular resolvent, non-convergence).
    Numerical,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid route: {0}")]
    InvalidRoute(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("adiabatic elimination undefined: link {link} has zero link damping")]
    EliminationUndefined { link: String },

    #[error("scattering undefined for unstable L (max Re eigenvalue = {max_real:e})")]
    Unstable { max_real: f64 },

    #[error("resolvent (L + i omega) is singular at omega = {omega}")]
    Singular { omega: f64 },

    #[error("no isolation: forward/reverse transmission ratio never reaches 2 (best ratio {best_ratio})")]
    NoIsolation { best_ratio: f64 },

    #[error("added noise undefined: zero gain from {input} to {output}")]
    ZeroGain { input: String, output: String },

    #[error("unknown bath {0}")]
    UnknownBath(String),

    #[error("unknown port at node {0}")]
    UnknownPort(usize),

    #[error("integrator not converged: halving the step moved the endpoint by {change:e}")]
    NotConverged { change: f64 },

    #[error("pump frequency zero: {0}")]
    DegeneratePump(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidLattice(_)
            | Error::InvalidRoute(_)
            | Error::InvalidInput(_)
            | Error::EliminationUndefined { .. }
            | Error::UnknownBath(_)
            | Error::UnknownPort(_)
            | Error::DegeneratePump(_) => ErrorCategory::Validation,
            Error::Unstable { .. }
            | Error::Singular { .. }
            | Error::NoIsolation { .. }
            | Error::ZeroGain { .. }
            | Error::NotConverged { .. }
            | Error::Numerical(_) => ErrorCategory::Numerical,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
