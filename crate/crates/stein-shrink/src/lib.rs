//! Covariance estimation for Gaussian data whose true covariance may be
//! singular, under Stein's entropy loss.
//!
//! The estimators act on the spectral decomposition of the unnormalized
//! sample covariance `S = X X^T` and shrink its eigenvalues; they unify the
//! invertible and rank-deficient regimes (any ordering of `n`, `r`, `p`).
//! On top of the estimator core sit a proof-inequality checker
//! ([`verify`]) and a paired Monte Carlo benchmark ([`bench`]) that measures
//! percentage risk improvement (PRIAL) against the best constant multiple
//! of `S`.

pub mod bench;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod loss;
pub mod matrix_io;
pub mod model;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
