//! File formats, reports and the `gyrocompass` command line on top of
//! [`gyrocompass_core`].

pub mod checkpoint;
pub mod cli;
pub mod error;
pub mod manifest;
pub mod recording_io;
pub mod report;

pub use error::{AppError, Result};
