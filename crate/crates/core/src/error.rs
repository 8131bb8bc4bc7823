use thiserror::Error;

use crate::numerics::NnlsSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero matrix has no thin SVD")]
    ZeroMatrix,

    #[error("negative regularization: alpha = {0}")]
    NegativeRegularization(f64),

    #[error(
        "NNLS stopped after {passes} passes without meeting the residual criterion \
         (residual {residual:.3e}, target {target:.3e})"
    )]
    NnlsNotConverged {
        passes: usize,
        residual: f64,
        target: f64,
        best: Box<NnlsSolution>,
    },

    #[error("non-finite state")]
    NonFiniteState,

    #[error("Newton did not converge at step {step} (residual norm {residual:.3e})")]
    NewtonNotConverged { step: usize, residual: f64 },

    #[error("singular Jacobian at row {0}")]
    SingularJacobian(usize),

    #[error("zero-energy snapshot set")]
    ZeroEnergy,

    #[error("degenerate generalized coordinates")]
    DegenerateCoordinates,

    #[error(
        "manifold inversion did not converge after {iterations} iterations \
         (gradient norm {gradient:.3e}, misfit {misfit:.3e})"
    )]
    InversionNotConverged {
        iterations: usize,
        gradient: f64,
        misfit: f64,
        iterate: Vec<f64>,
    },

    #[error("training snapshot {index}: {source}")]
    TrainingSnapshot { index: usize, source: Box<Error> },

    #[error("non-finite training entry at snapshot {snapshot}, entity {entity}")]
    NonFiniteTraining { snapshot: usize, entity: usize },

    #[error("training system violates d = C·1 (relative mismatch {0:.3e})")]
    AssemblyMismatch(f64),

    #[error("tangent rank collapse")]
    TangentRankCollapse,

    #[error("singular hyperreduced system")]
    SingularHyperreducedSystem,

    #[error(
        "Gauss-Newton did not converge after {iterations} iterations (gradient norm {gradient:.3e})"
    )]
    GaussNewtonNotConverged {
        iterations: usize,
        gradient: f64,
        iterate: Vec<f64>,
    },

    #[error("reduced-order step to t = {time}: {source}")]
    RomStep { time: f64, source: Box<Error> },

    #[error("zero reference QoI")]
    ZeroReferenceQoi,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics themselves, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::TrainingSnapshot { source, .. } | Error::RomStep { source, .. } => {
                source.is_numerical()
            }
            Error::DimensionMismatch(_)
            | Error::InvalidArgument(_)
            | Error::Format(_)
            | Error::Config(_)
            | Error::Io(_) => false,
            _ => true,
        }
    }
}
