//! OFDM resource grid, channel estimation, equalization, SINR and the
//! CQI/MCS/BLER link abstraction.

pub mod equalize;
pub mod estimate;
pub mod grid;
pub mod mcs;
pub mod numerology;

pub use equalize::{
    expected_post_eq_sinr, mmse_equalize, mmse_matrix, pilot_sinr, siso_expected_sinr, siso_mmse_gain,
    siso_pilot_sinr, true_post_eq_sinr,
};
pub use estimate::{estimate_channel, estimate_noise, EstimationMode};
pub use grid::{build_grid, ResourceGrid, Role};
pub use mcs::{bler_model, crc_outcome, crc_pass, wideband_map, McsEntry, McsTable, WidebandMap};
pub use numerology::OfdmGeometry;

/// Upper limit applied to every SINR value, in dB.
pub const SINR_CEILING_DB: f64 = 40.0;

pub fn sinr_ceiling() -> f64 {
    from_db(SINR_CEILING_DB)
}

pub fn db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
