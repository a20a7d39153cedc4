use thiserror::Error;

/// Errors produced by the geometry kernel, the shape constructors and the
/// numerical solvers built on top of them.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    /// A refined boolean-area estimate did not settle: the residual between
    /// successive refinement levels did not shrink by at least a factor 2.
    #[error("boolean area did not converge under refinement (coarse {coarse}, fine {fine})")]
    AccuracyFailure { coarse: f64, fine: f64 },

    #[error("infeasible parameters: {0}")]
    InfeasibleParameter(String),

    #[error("solver failed after {iterations} iterations (best residual {best_residual:e})")]
    SolverFailure { iterations: usize, best_residual: f64 },

    /// Quotients are only defined pointwise for sets with positive asymmetry.
    #[error("quotient is undefined at the ball (asymmetry {alpha:e})")]
    UndefinedAtBall { alpha: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("annulus is degenerate (inner radius {inner}, outer radius {outer})")]
    DegenerateAnnulus { inner: f64, outer: f64 },

    #[error("symmetrization center is not interior to the shape")]
    InvalidCenter,

    #[error("symmetrized angle {theta} exceeds the half-width limit {limit}")]
    Overlap { theta: f64, limit: f64 },

    #[error("radius {rho} lies inside the excluded end margins of [{inner}, {outer}]")]
    EndpointExclusion { rho: f64, inner: f64, outer: f64 },

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("coefficient estimate did not converge (extrapolated {extrapolated}, polynomial fit {polyfit} +/- {stderr:e})")]
    NonConvergentEstimate {
        extrapolated: f64,
        polyfit: f64,
        stderr: f64,
    },

    #[error("every seed of the family search was infeasible")]
    InfeasibleFamily,

    #[error("evaluation budget of {budget} exhausted (best value {best_value})")]
    BudgetExceeded { budget: usize, best_value: f64 },

    #[error("free-boundary search rejected every step: {0}")]
    Stuck(String),
}

pub type Result<T> = std::result::Result<T, Error>;
