//! File formats, experiment runner and command-line interface around
//! [`tripletreg_core`].

pub mod cli;
pub mod error;
pub mod experiment;
pub mod export;
pub mod io;
pub mod model_io;

pub use error::{Error, Result};
pub use tripletreg_core as core;
