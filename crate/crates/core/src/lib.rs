//! Rigorous bounds on extreme values of observables along trajectories of
//! polynomial ODEs, via auxiliary functions and sum-of-squares programming.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod grid;
pub mod localization;
pub mod polynomial;
pub mod sdp;
pub mod soscert;
pub mod system;
pub mod trajectories;

pub use error::{Error, Result};
pub use polynomial::{parse, Monomial, Polynomial};
