pub mod cli;
pub mod diff;
pub mod encoder;
pub mod error;
pub mod harness;
pub mod heads;
pub mod metrics;
pub mod nn;
pub mod queryback;

pub use error::{Error, Result};
