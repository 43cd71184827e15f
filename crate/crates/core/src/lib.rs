//! Energy-efficiency analysis of a single-antenna link assisted by an active
//! (amplifying) reconfigurable intelligent surface, compared with a passive
//! one.
//!
//! - [`params`]: configuration, unit conversions and path loss.
//! - [`channel`]: Rayleigh sampling and phase alignment.
//! - [`exact_sim`]: per-realization EE and the Monte Carlo harness.
//! - [`asymptotic`]: large-N closed forms and their one-variable families.
//! - [`pa_opt`]: optimal split of the power budget between BS and surface.
//! - [`crossover`]: element count where active and passive break even.
//! - [`experiments`]: figure sweeps written as CSV with a JSON sidecar.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod channel;
pub mod crossover;
pub mod error;
pub mod exact_sim;
pub mod experiments;
pub mod pa_opt;
pub mod params;

pub use error::{Error, Result};
pub use params::{Scenario, SystemConfig};
