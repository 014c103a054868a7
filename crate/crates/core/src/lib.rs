//! Weak-value amplification of photon arrival times in postselected
//! spontaneous emission.
//!
//! * [`pointer`]: analytic arrival-time and spectral model of a Zeeman-split
//!   V system observed through a polarizer.
//! * [`sim`]: shot-based Monte Carlo of the photon-counting experiment,
//!   including detector dead time and afterpulsing.
//! * [`analysis`]: afterpulse filter, dead-time correction, reference-based
//!   background subtraction, fits and sensitivity bounds.
//! * [`cli`]: configuration and the batch commands behind the `weakbeam` binary.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod histogram;
pub mod pointer;
pub mod quad;
pub mod sim;

pub use error::{Error, Result};
pub use histogram::{histogram, TimeHistogram};
