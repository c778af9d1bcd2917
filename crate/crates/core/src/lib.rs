//! Radially symmetric vortices of the rotating Gross–Pitaevskii equation, their
//! Hessian spectra, secondary bifurcations and vortex configurations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod cli;
pub mod error;
pub mod field;
pub mod hermite;
pub mod hessian;
pub mod parallel;
pub mod quadrature;
pub mod primary;
pub mod radial;
pub mod secondary;
pub mod vortex;

pub use error::{Error, Result};
