//! Simulator for a star-topology qubit perceptron driven by pure-state
//! information reservoirs through a collision model.

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod network;
pub mod scenario;
pub mod state;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
