//! Cyclic-prefix-free OFDM massive MIMO uplink simulator.

pub mod analytics;
pub mod channel;
pub mod dsp;
pub mod error;
pub mod freq;
pub mod harness;
pub mod linalg;
pub mod measure;
pub mod ofdm;
pub mod tr;

pub use dsp::C64;
pub use error::{Error, Result};
