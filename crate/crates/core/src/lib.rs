//! Spectator-qubit phase estimation and control for telegraph noise.

pub mod analysis;
pub mod bayes;
pub mod cli;
pub mod control;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod rtp;
pub mod scalar;

pub use error::{Error, Result};
