//! Scalable user-centric cell-free massive MIMO: physical-layer simulation
//! under fronthaul quantization and joint cluster-processor placement with
//! fronthaul routing.

pub mod channel;
pub mod clustering;
pub mod downlink;
pub mod error;
pub mod experiment;
pub mod fronthaul;
pub mod geometry;
pub mod pathloss;
pub mod pilots;
pub mod rng;
pub mod simulation;
pub mod uplink;

pub use error::{Error, Result};
