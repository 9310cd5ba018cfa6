//! Desk-scale building automation kernel.
//!
//! Everything in this crate is a pure function of its inputs and runs without
//! `std`: a single-zone RC thermal model with HVAC and occupant gains,
//! coordinate-descent calibration, an event-driven occupancy counter, the
//! regression forecasters used to anticipate arrivals, Fanger PMV/PPD comfort,
//! the occupancy-triggered pre-cooling controller and the reference optimal
//! control problem used to score it.
//!
//! IO, file formats, the co-simulation wire protocol and the CLI live in the
//! `occmpc` companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calibration;
pub mod closed_loop;
pub mod comfort;
pub mod counter;
mod error;
pub mod forecast;
mod linalg;
pub mod mpc;
pub mod series;
pub mod strategy;
pub mod thermal;

pub use error::{Error, Result};
pub use series::TimeSeries;
pub use thermal::{SimulationState, StepMethod, ZoneThermalParams};
