//! Time-of-arrival distributions for free quantum particles.
//!
//! The crate computes the covariant arrival-time density for a free particle
//! on the line, the momentum density on the half-line, and the one-parameter
//! family of arrival distributions obtained from self-adjoint extensions of
//! the time operator. Every density comes with the grid guards and checks that
//! make its numerical accuracy explicit.

pub mod arrival;
pub mod cli;
pub mod error;
pub mod extensions;
pub mod halfline;
pub mod numerics;
pub mod report;
pub mod states;

pub use error::{Result, ToaError};
pub use num_complex::Complex64 as C64;
pub use report::{CheckReport, Distribution};
