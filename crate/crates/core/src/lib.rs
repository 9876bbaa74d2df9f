//! Pain-window screening for EMG/IMU sensor sessions.
//!
//! The crate is organised bottom-up:
//!
//! - [`signal`]: windowing and per-window EMG features (trimmed average,
//!   filtered/amplified mean and peak).
//! - [`roughset`]: information systems, indiscernibility, positive regions,
//!   dependence/importance weighting and threshold screening.
//! - [`frame`]: the line-oriented sensor wire format.
//! - [`synth`]: a seeded synthetic patient/device stream with ground truth.
//! - [`pipeline`]: frames to assessments and therapy commands.
//! - [`stats`]: Student's t-test and one-way ANOVA.
//! - [`config`]: the flat `key = value` run configuration.

pub mod config;
pub mod error;
pub mod frame;
pub mod pipeline;
pub mod roughset;
pub mod signal;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
