use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument {s} is outside the domain of the Laplace transform (requires s > {lower})")]
    LaplaceDomain { s: f64, lower: f64 },

    #[error("Bessel K requires a positive argument, got {0}")]
    BesselDomain(f64),

    #[error("moment of order {order} does not exist for this mixing law")]
    InvalidOrder { order: f64 },

    #[error("matrix is numerically singular (smallest/largest singular value = {ratio:e})")]
    SingularMatrix { ratio: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("portfolio lies outside the finite-utility set (g(x) = {g} <= s0 = {s0})")]
    Infeasible { g: f64, s0: f64 },

    #[error("excess mean return is zero (C = 0); the exponential-utility optimizer is degenerate")]
    DegenerateExcessReturn,

    #[error("theta {theta} is outside (-{theta0}, {theta0})")]
    ThetaDomain { theta: f64, theta0: f64 },

    #[error("optimization domain is empty")]
    EmptyDomain,

    #[error("H has no interior minimum; the infimum sits on the boundary -theta0")]
    NoInteriorMinimum,

    #[error("first-order condition has no root in the admissible range")]
    NoRoot,

    #[error("utility provides derivatives up to order {max}, order {order} requested")]
    OrderUnavailable { order: usize, max: usize },

    #[error("utility derivative check failed: {0}")]
    UtilityValidation(String),

    #[error("reduced point is infeasible: {0}")]
    InfeasiblePoint(String),

    #[error("no feasible point in the requested (phi, psi, rho) box")]
    EmptyFeasibleRegion,

    #[error("z = {z} lies outside the mixing support [{lower}, {upper}]")]
    SupportDomain { z: f64, lower: f64, upper: f64 },
}
