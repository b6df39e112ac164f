//! Large-N limits: an explicit finite-difference solver for the two-asset
//! Black-Scholes-Barenblatt equation and Gaussian expectations for the
//! linear (single covariance) case.

mod bsb;
mod gaussian;

pub use bsb::{solve_bsb, BsbSolution, BsbStepper, CovarianceFamily, Grid, GridField};
pub use gaussian::{gaussian_price, pivoted_cholesky, GaussianMethod};
