//! Link-level simulation and analysis of an OFDM downlink that shares its
//! band with a pulsed LFM radar.
//!
//! The crate covers QAM geometry, the distribution of the max-min
//! nearest-neighbour distance used as a blind SINR estimate, an OFDM link
//! with EPA fading and radar pulse injection, a semi-blind SINR estimator,
//! CSI feedback schemes and a closed-loop link simulator.

pub mod channel;
pub mod constellation;
pub mod detector;
pub mod dist;
pub mod error;
pub mod feedback;
pub mod heuristic;
pub mod linksim;
pub mod phy;
pub mod quadrature;
pub mod radar;

pub use error::{Error, Result};
