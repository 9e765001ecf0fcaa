//! Stationary IMU self-alignment and learned gyrocompassing.
//!
//! Everything here is `no_std` with `alloc`: frame math, the sensor
//! simulator, the averaging baseline, Allan variance, dataset preparation,
//! the Bi-LSTM regressor and the evaluation statistics. File formats and the
//! command line live in the `gyrocompass` crate.
//!
//! Angles are radians and rates rad/s internally. Headings crossing a file
//! or table boundary are degrees; model inputs are deg/hr.

#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod align;
pub mod allan;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod frames;
pub mod learn;
pub mod sensor;

pub use error::{Error, Result};
