//! Bi-fidelity uncertainty quantification with reduced polynomial chaos bases.
//!
//! Many cheap low-fidelity samples identify a small stochastic basis (via a
//! polynomial chaos fit and a Karhunen–Loève decomposition of its
//! coefficients); a handful of high-fidelity samples are then regressed onto
//! that basis. The [`bounds`] module evaluates a-priori and practical
//! a-posteriori error bounds for the resulting estimate.

pub mod basis;
pub mod bounds;
pub mod cli_io;
pub mod error;
pub mod linalg;
pub mod mid;
pub mod models;
pub mod smr;
pub mod solvers;

pub use error::{BifiError, Result};
