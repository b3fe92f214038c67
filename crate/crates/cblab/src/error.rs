//! Crate-wide error type and process exit-code mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The lattice spacing is too coarse for the domain: no site survives
    /// the interior distance cut.
    #[error("no interior site at epsilon={epsilon}: lattice too coarse for the domain")]
    EmptyInterior { epsilon: f64 },

    /// A site was passed to an operator outside its domain of definition.
    #[error("site {site} is not in the {required} set")]
    OutOfRange { site: usize, required: &'static str },

    /// A bond length fell at or below the admissible floor of the potential.
    #[error("bond {offset:?} has length {length:.6e} <= admissible floor {floor:.6e}{}",
            site.map(|s| format!(" at site {s}")).unwrap_or_default())]
    OutsideAdmissibleSet {
        offset: [i64; 3],
        length: f64,
        floor: f64,
        site: Option<usize>,
    },

    /// An iterative linear solve failed to reach its tolerance.
    #[error("linear solver diverged: relative residual {residual:.3e} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },

    /// An eigenvalue iteration made no progress.
    #[error("eigensolver stalled: {detail}")]
    SolverStalled { detail: String },

    /// The cos/sin weight |c(k)|^2+|s(k)|^2 underflowed for a nonzero wave
    /// vector; cannot happen for spanning stencils.
    #[error("degenerate wave vector k={k:?}")]
    DegenerateWavevector { k: [f64; 3] },

    /// Convolution quadrature disagrees with its doubled-order self-test.
    #[error("quadrature order {order} too low: self-test gap {gap:.3e}")]
    QuadratureOrderTooLow { order: usize, gap: f64 },

    /// A hypothesis of the coercivity verifier failed.
    #[error("hypothesis violated: {detail}")]
    HypothesisViolated { detail: String },

    /// The pointwise stability precheck of a convergence run failed.
    #[error("stability precheck failed: {detail}")]
    StabilityPrecheckFailed { detail: String },

    /// The integrator produced a NaN or infinity.
    #[error("non-finite state at t={t}")]
    NonFiniteState { t: f64 },

    /// Rate fitting was requested on unusable data.
    #[error("degenerate rate fit: {detail}")]
    DegenerateFit { detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code: 2 precondition/hypothesis failure, 3 numerical
    /// failure, 4 configuration error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::EmptyInterior { .. }
            | Error::HypothesisViolated { .. }
            | Error::StabilityPrecheckFailed { .. } => 2,
            Error::OutOfRange { .. }
            | Error::OutsideAdmissibleSet { .. }
            | Error::SolverDiverged { .. }
            | Error::SolverStalled { .. }
            | Error::DegenerateWavevector { .. }
            | Error::QuadratureOrderTooLow { .. }
            | Error::NonFiniteState { .. }
            | Error::DegenerateFit { .. } => 3,
            Error::Config(_) | Error::Io(_) => 4,
        }
    }
}
