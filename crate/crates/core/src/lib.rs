//! Simulation of a liquid-crystal reconfigurable reflecting surface at
//! 220 GHz: element and array model, link budget, measurement-driven SPGD
//! beamforming with weight feedback, and a multi-user OFDM physical layer.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated checks also reject NaN

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod phy;
pub mod ris;
pub mod scenario;
pub mod spgd;

pub use error::{Error, Result};
