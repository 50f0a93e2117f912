//! Drone detection with convolutional spiking neural networks on
//! event-camera data: synthetic event generation, a spiking inference
//! engine with synaptic-operation accounting, surrogate-gradient training,
//! power models and evaluation tools.

pub mod cli;
pub mod error;
pub mod eval;
pub mod events;
pub mod power;
pub mod snn;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
