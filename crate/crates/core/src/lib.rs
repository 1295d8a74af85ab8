//! Vector-host epidemic reaction-diffusion toolkit.
//!
//! Equilibria and the basic reproduction number, the dispersion relation and
//! minimal traveling-wave speed, an explicit method-of-lines PDE solver,
//! super/sub-solution certificate checks, and traveling-front diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod dispersion;
pub mod error;
pub mod exec;
pub mod model;
pub mod solver;
pub mod wavelab;

pub use error::{Error, Result};
pub use exec::Exec;
pub use model::{ModelParams, State};
