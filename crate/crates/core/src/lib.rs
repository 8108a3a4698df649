//! Gate-level simulation, calibration and benchmarking of a two-ion register
//! driven by chip-integrated microwave fields.

pub mod bench;
pub mod error;
pub mod fit;
pub mod gates;
pub mod noise;
pub mod quantum;
pub mod rng;
pub mod transpile;

pub use error::{Error, FitError, Result};
