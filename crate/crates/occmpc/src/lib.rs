//! File formats, synthetic data, the co-simulation wire protocol and the
//! scenario runner around [`occmpc_core`].

pub mod config;
pub mod error;
pub mod evaluation;
pub mod generator;
pub mod io;
pub mod scenario;
pub mod wire;

pub use error::{Error, Result};
pub use occmpc_core as core;
