//! Linear-entropy classical correlation and von Neumann discord bounds for `d x 2` states.

pub mod bench;
pub mod chanext;
pub mod discord;
pub mod error;
pub mod io;
pub mod lin_corr;
pub mod qmat;
pub mod simplex;
pub mod states;
pub mod tol;

pub use error::{Error, Result};
pub use qmat::DensityMatrix;
