//! Expected-utility portfolio optimization for asset returns that follow a
//! normal mean-variance mixture
//!
//! ```text
//! X = μ + γ Z + √Z · A · N
//! ```
//!
//! where `Z > 0` is a mixing variable independent of the standard normal
//! vector `N`.
//!
//! * [`mixing`] holds the mixing laws (Laplace transforms, moments, sampling)
//!   and the modified Bessel function they rest on.
//! * [`model`] is the market description and its y-coordinate transform.
//! * [`exp_opt`] solves the exponential-utility problem in closed form via the
//!   one-dimensional function `H(θ)`.
//! * [`general_opt`] handles smooth utilities through a moment expansion that
//!   reduces the search to three variables.
//! * [`large_market`] builds finite segments of a countable-asset market and
//!   tracks the optimal utilities as the segment grows.
//! * [`mc_oracle`] is an independent Monte Carlo and quadrature toolbox used to
//!   verify all of the above.
//! * [`cli`] is the batch front end behind the `nmvm` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod exp_opt;
pub mod general_opt;
pub mod large_market;
pub mod mc_oracle;
pub mod mixing;
pub mod model;
pub mod optim;
pub mod random;

pub use error::{Error, Result};
pub use exp_opt::{ExpOptResult, QDomain};
pub use general_opt::{ReducedPoint, UtilitySpec};
pub use large_market::{LargeMarketSpec, Sequence};
pub use mixing::MixingDistribution;
pub use model::{MarketModel, Portfolio, TransformedModel};

