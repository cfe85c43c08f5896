use thiserror::Error;

/// Errors raised by geometry, quadrature, solver and simulation routines.
///
/// Positions and parameters are carried as `f64` regardless of the scalar
/// type used for the computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate curve: |dα/ds| = {speed:e} at s = {s}")]
    DegenerateCurve { s: f64, speed: f64 },

    #[error("normal undefined at u = {u}: curvature below threshold and no fallback normal supplied")]
    UndefinedNormal { u: f64 },

    #[error("focal distance is infinite for zero curvature")]
    InfiniteFocalDistance,

    #[error("quadrature failed to reach tolerance {tol:e} (estimated error {estimate:e}) after {evaluations} panels")]
    QuadratureFailure { tol: f64, estimate: f64, evaluations: usize },

    #[error("channel touches its focal set at u = {u}: max κη = {max_kappa_eta}")]
    FocalContact { u: f64, max_kappa_eta: f64 },

    #[error("section centroid ({eta0:e}, {beta0:e}) is not at the origin; request auto-centering or fix the section")]
    NonCenteredSection { eta0: f64, beta0: f64 },

    #[error("closed form requires a {expected} section")]
    UnsupportedSection { expected: &'static str },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("point lies outside the channel's curve domain")]
    OutsideDomain,

    #[error("ambiguous projection onto the base curve near u = {u}")]
    FocalAmbiguity { u: f64 },

    #[error("walk step length {step:e} exceeds resolution limit {limit:e}")]
    StepTooLarge { step: f64, limit: f64 },

    #[error("at u = {u}")]
    AtPoint {
        u: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attaches the grid position at which a pointwise evaluation failed.
    pub fn at(self, u: f64) -> Self {
        match self {
            e @ Error::AtPoint { .. } => e,
            e => Error::AtPoint { u, source: Box::new(e) },
        }
    }

    /// Strips any [`Error::AtPoint`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for failures of the numerical kind (focal contact, quadrature).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::FocalContact { .. }
                | Error::QuadratureFailure { .. }
                | Error::InfiniteFocalDistance
                | Error::FocalAmbiguity { .. }
                | Error::DegenerateCurve { .. }
                | Error::UndefinedNormal { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
