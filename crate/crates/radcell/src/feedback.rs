//! CSI quantization over reporting windows, dual-state reports with radar
//! indicator bits, and feedback overhead.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statistic {
    Min,
    Median,
    Max,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Min => "min",
            Statistic::Median => "median",
            Statistic::Max => "max",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Statistic::Min),
            "median" => Ok(Statistic::Median),
            "max" => Ok(Statistic::Max),
            other => Err(Error::Config(format!("unknown CQI statistic {other:?}"))),
        }
    }
}

/// The chosen statistic of the per-block CQIs; an even-length median takes
/// the lower middle.
pub fn quantize_window(cqis: &[u8], stat: Statistic) -> Result<u8> {
    if cqis.is_empty() {
        return Err(Error::Input("CQI window is empty".into()));
    }
    Ok(match stat {
        Statistic::Min => *cqis.iter().min().unwrap(),
        Statistic::Max => *cqis.iter().max().unwrap(),
        Statistic::Median => {
            let mut v = cqis.to_vec();
            v.sort_unstable();
            v[(v.len() - 1) / 2]
        }
    })
}

pub const MAX_CQI: u8 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsiReport {
    pub cqi: u8,
    /// Always 0 for a single antenna.
    pub pmi: u8,
    pub rank: u8,
}

impl CsiReport {
    pub fn siso(cqi: u8) -> Result<Self> {
        Self::new(cqi, 0, 1)
    }

    pub fn new(cqi: u8, pmi: u8, rank: u8) -> Result<Self> {
        if cqi > MAX_CQI {
            return Err(Error::Input(format!("CQI {cqi} out of range 0..=15")));
        }
        if rank == 0 {
            return Err(Error::Input("rank must be at least 1".into()));
        }
        Ok(CsiReport { cqi, pmi, rank })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualCsiReport {
    pub fading: CsiReport,
    /// Present only when the window saw an impaired block.
    pub impaired: Option<CsiReport>,
    /// One bit per block of the window the report will be in force for.
    pub radar_indicator: Vec<bool>,
    /// The window had no clean block, so `fading` summarizes every block.
    pub fading_fallback: bool,
}

impl DualCsiReport {
    /// CQI to use for block `offset` of the in-force window.
    pub fn cqi_for(&self, offset: usize) -> u8 {
        match (self.radar_indicator.get(offset), &self.impaired) {
            (Some(true), Some(r)) => r.cqi,
            _ => self.fading.cqi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualStatistics {
    pub fading: Statistic,
    pub impaired: Statistic,
}

impl Default for DualStatistics {
    fn default() -> Self {
        DualStatistics { fading: Statistic::Median, impaired: Statistic::Min }
    }
}

/// Splits a window's CQIs by impairment flag and summarizes each state.
pub fn dual_csi_report(
    cqis: &[u8],
    impaired: &[bool],
    indicator: Vec<bool>,
    stats: DualStatistics,
) -> Result<DualCsiReport> {
    if cqis.len() != impaired.len() {
        return Err(Error::Input("one impairment flag per CQI is required".into()));
    }
    if indicator.len() != cqis.len() {
        return Err(Error::Input(format!(
            "indicator covers {} blocks, window has {}",
            indicator.len(),
            cqis.len()
        )));
    }
    let split = |want: bool| -> Vec<u8> {
        cqis.iter().zip(impaired).filter(|(_, &f)| f == want).map(|(c, _)| *c).collect()
    };
    let (clean, hit) = (split(false), split(true));
    let (fading_cqi, fading_fallback) = if clean.is_empty() {
        (quantize_window(cqis, stats.fading)?, true)
    } else {
        (quantize_window(&clean, stats.fading)?, false)
    };
    let impaired = if hit.is_empty() { None } else { Some(CsiReport::siso(quantize_window(&hit, stats.impaired)?)?) };
    Ok(DualCsiReport { fading: CsiReport::siso(fading_cqi)?, impaired, radar_indicator: indicator, fading_fallback })
}

/// Indicator bits for blocks `[first, first + len)` from a prediction map.
pub fn indicator_bits(prediction: &BTreeMap<u64, u32>, first: u64, len: usize) -> Vec<bool> {
    (first..first + len as u64).map(|b| prediction.get(&b).is_some_and(|&c| c > 0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overhead {
    /// Extra bits per report across all users.
    pub b_int: u64,
    /// Extra bits per second.
    pub r_int: f64,
}

/// Additional feedback for `n_act` users each sending `n_int` bits of
/// impaired-state CSI plus `b_rad` broadcast indicator bits, per window of
/// `t_csi_blocks` blocks lasting `block_duration` seconds each.
pub fn feedback_overhead(n_act: u64, n_int: u64, b_rad: u64, t_csi_blocks: u64, block_duration: f64) -> Result<Overhead> {
    if t_csi_blocks == 0 || !(block_duration > 0.0) {
        return Err(Error::Input("reporting window must be positive".into()));
    }
    // ceil(log2 T)
    let lo = u64::from(64 - (t_csi_blocks - 1).leading_zeros());
    if b_rad < lo || b_rad > t_csi_blocks {
        return Err(Error::Input(format!(
            "indicator size {b_rad} outside [{lo}, {t_csi_blocks}] for a {t_csi_blocks}-block window"
        )));
    }
    let b_int = n_act * n_int + b_rad;
    Ok(Overhead { b_int, r_int: b_int as f64 / (t_csi_blocks as f64 * block_duration) })
}
