//! Upper and lower hedging prices of multivariate European claims in
//! discrete-time multinomial games, with closed-form fast paths for
//! submodular and supermodular payoffs and the large-N limits given by the
//! Black-Scholes-Barenblatt equation.

pub mod census;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod lp;
pub mod payoffs;
pub mod pde;
pub mod pricing;
pub mod submodular;

pub use error::{Error, Result};
