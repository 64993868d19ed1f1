//! Gradient blow-up verification for elliptic systems posed in the narrow gap
//! between two nearly touching `C^{1,γ}` boundaries.

pub mod auxiliary;
pub mod cli;
pub mod coefficients;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod oracle;
pub mod sampling;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
