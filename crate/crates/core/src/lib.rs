//! Complete and time-averaged reduced models for one-dimensional heat and
//! coupled heat-moisture transfer through building walls.
//!
//! Everything inside the solvers is dimensionless. Physical units only show
//! up when boundary data is loaded ([`signal`]) and when engineering outputs
//! are reported ([`analysis`]).
//!
//! The pieces fit together as follows:
//!
//! * [`units`]: grids, reference scales, property laws and the scaling maps.
//! * [`signal`]: boundary time series, block time-averaging, synthetic weather.
//! * [`empirical`]: closed-form fluctuation candidates and their period averages.
//! * [`heat`] / [`hm`]: semi-discrete right-hand sides for the complete model
//!   and the averaged reduced model.
//! * [`integrate`]: explicit Euler, RKL1 super-time-stepping and the trajectory driver.
//! * [`calibrate`]: Levenberg-Marquardt fitting of fluctuation parameters.
//! * [`analysis`]: error norms, loads, resistances, uncertainty bands, CPU ratios.

pub mod analysis;
pub mod calibrate;
pub mod empirical;
mod error;
pub mod heat;
pub mod hm;
pub mod integrate;
pub mod signal;
pub mod units;

pub use error::{Error, Result};
