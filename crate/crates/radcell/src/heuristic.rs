//! Max-min nearest-neighbour distance over a coherence block and the
//! blind SINR estimate derived from it.

use num_complex::Complex64;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::phy::{from_db, SINR_CEILING_DB};

pub const DEFAULT_K_RB: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceBlock {
    pub symbols: Vec<Complex64>,
}

impl CoherenceBlock {
    pub fn new(symbols: Vec<Complex64>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Input("coherence block is empty".into()));
        }
        Ok(CoherenceBlock { symbols })
    }

    pub fn k_rb(&self) -> usize {
        self.symbols.len()
    }
}

/// Largest nearest-neighbour distance in the block.
pub fn d_max(block: &[Complex64], c: &Constellation) -> Result<f64> {
    if block.is_empty() {
        return Err(Error::Input("coherence block is empty".into()));
    }
    let mut m = 0.0f64;
    for &y in block {
        m = m.max(c.nearest_neighbor(y)?.1);
    }
    Ok(m)
}

/// Same as [`d_max`] via the O(1) slicer; `block` must be finite and non-empty.
pub fn d_max_sliced(block: &[Complex64], c: &Constellation) -> f64 {
    block.iter().map(|&y| (y - c.point(c.slice(y))).norm()).fold(0.0, f64::max)
}

/// Power-domain SINR `signal_power / dmax²`, capped at `ceiling_db`.
pub fn sinr_from_dmax_capped(dmax: f64, signal_power: f64, ceiling_db: f64) -> Result<f64> {
    if !(dmax >= 0.0) || !(signal_power >= 0.0) {
        return Err(Error::Input(format!("need dmax >= 0 and signal power >= 0, got {dmax}, {signal_power}")));
    }
    let cap = from_db(ceiling_db);
    if dmax == 0.0 {
        return Ok(cap);
    }
    Ok((signal_power / (dmax * dmax)).min(cap))
}

pub fn sinr_from_dmax(dmax: f64, signal_power: f64) -> Result<f64> {
    sinr_from_dmax_capped(dmax, signal_power, SINR_CEILING_DB)
}
