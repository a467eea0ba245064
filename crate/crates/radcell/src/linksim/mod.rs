//! Closed-loop link simulation: delayed CSI feedback, link adaptation,
//! HARQ and throughput accounting for several feedback schemes driven in
//! lockstep by one physical-layer realization.

pub mod chain;

use std::collections::{HashMap, VecDeque};

use crate::channel::RadarLink;
use crate::detector::{reconstruction_block_sinr, BlockObservation, Detection, DetectorConfig, HybridEstimator};
use crate::error::{Error, Result};
use crate::feedback::{dual_csi_report, indicator_bits, quantize_window, DualCsiReport, DualStatistics, Statistic};
use crate::phy::{bler_model, crc_pass, EstimationMode, McsTable, Role};
use crate::radar::RadarConfig;

pub use chain::{data_only, rng_for, ChainConfig, PhyBlock, PhyChain, RadarSetup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feedback {
    Single(Statistic),
    Dual,
}

impl Feedback {
    pub fn name(self) -> &'static str {
        match self {
            Feedback::Single(s) => s.name(),
            Feedback::Dual => "dual",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dual" => Ok(Feedback::Dual),
            other => Ok(Feedback::Single(Statistic::parse(other)?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Pilot,
    Hybrid,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Pilot => "pilot",
            Estimator::Hybrid => "hybrid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pilot" => Ok(Estimator::Pilot),
            "hybrid" => Ok(Estimator::Hybrid),
            other => Err(Error::Config(format!("unknown SINR estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scheme {
    pub feedback: Feedback,
    pub estimator: Estimator,
}

impl Scheme {
    pub const fn new(feedback: Feedback, estimator: Estimator) -> Self {
        Scheme { feedback, estimator }
    }

    /// The three single-statistic schemes with pilot-aided SINR, then dual
    /// feedback with hybrid SINR.
    pub fn defaults() -> Vec<Scheme> {
        vec![
            Scheme::new(Feedback::Single(Statistic::Min), Estimator::Pilot),
            Scheme::new(Feedback::Single(Statistic::Median), Estimator::Pilot),
            Scheme::new(Feedback::Single(Statistic::Max), Estimator::Pilot),
            Scheme::new(Feedback::Dual, Estimator::Hybrid),
        ]
    }

    fn needs_detector(self) -> bool {
        self.feedback == Feedback::Dual || self.estimator == Estimator::Hybrid
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub snr_db: f64,
    /// `None` switches the radar off.
    pub inr_db: Option<f64>,
    pub radar: RadarConfig,
    pub radar_link: RadarLink,
    /// First pulse edge in seconds; uniform over one interval when absent.
    pub t0: Option<f64>,
    pub n_rb: usize,
    pub doppler_hz: f64,
    pub estimation: EstimationMode,
    pub t_csi: usize,
    pub csi_delay: usize,
    pub harq_max_retx: u8,
    /// Wait before a retransmission, seconds.
    pub tau_wait: f64,
    /// Blocks simulated before metrics are collected.
    pub warmup_blocks: u64,
    pub duration_blocks: u64,
    pub schemes: Vec<Scheme>,
    pub dual_stats: DualStatistics,
    /// Effective-SINR margin for CSI ageing over the reporting delay, dB.
    pub cqi_backoff_db: f64,
    pub detector: DetectorConfig,
    /// Replace heuristic SINR on detected symbols by the decoded-symbol
    /// SINR once a block passes its CRC.
    pub reconstruction: bool,
    pub seed: u64,
    pub keep_trace: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            snr_db: 19.5,
            inr_db: Some(10.0),
            radar: RadarConfig::default(),
            radar_link: RadarLink::Static,
            t0: None,
            n_rb: 50,
            doppler_hz: 10.0,
            estimation: EstimationMode::Genie,
            t_csi: 10,
            csi_delay: 8,
            harq_max_retx: 4,
            tau_wait: 8e-3,
            warmup_blocks: 600,
            duration_blocks: 10_000,
            schemes: Scheme::defaults(),
            dual_stats: DualStatistics::default(),
            cqi_backoff_db: 4.0,
            detector: DetectorConfig::new(1e-3),
            reconstruction: true,
            seed: 1,
            keep_trace: true,
        }
    }
}

impl ScenarioConfig {
    pub fn block_duration(&self) -> f64 {
        self.detector.tracker.block_duration
    }

    pub fn validate(&self) -> Result<()> {
        if !self.snr_db.is_finite() {
            return Err(Error::Config("SNR must be finite".into()));
        }
        if self.inr_db.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Config("INR must be finite; leave it out to disable the radar".into()));
        }
        if !(self.cqi_backoff_db >= 0.0 && self.cqi_backoff_db.is_finite()) {
            return Err(Error::Config("CQI back-off must be a non-negative number of dB".into()));
        }
        if self.t_csi == 0 {
            return Err(Error::Config("CSI interval must be at least one block".into()));
        }
        if self.duration_blocks < self.t_csi as u64 {
            return Err(Error::Config("duration must cover at least one CSI interval".into()));
        }
        if !(self.tau_wait > 0.0) || self.rtt_blocks() == 0 {
            return Err(Error::Config("retransmission wait must be at least one block".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no feedback scheme selected".into()));
        }
        let tb = crate::phy::OfdmGeometry::lte(self.n_rb)?.block_duration();
        if (tb - self.block_duration()).abs() > 1e-12 {
            return Err(Error::Config("detector block duration differs from the grid's".into()));
        }
        self.radar.validate()
    }

    /// Combinations that run but are unusual.
    pub fn warnings(&self) -> Vec<String> {
        self.schemes
            .iter()
            .filter(|s| s.feedback == Feedback::Dual && s.estimator == Estimator::Pilot)
            .map(|_| "dual feedback with pilot-aided SINR cannot see data-symbol interference".to_string())
            .collect()
    }

    pub fn rtt_blocks(&self) -> u64 {
        (self.tau_wait / self.block_duration()).round() as u64
    }

    fn chain_config(&self) -> ChainConfig {
        ChainConfig {
            n_rb: self.n_rb,
            snr_db: self.snr_db,
            doppler_hz: self.doppler_hz,
            estimation: self.estimation,
            radar: self.inr_db.map(|inr_db| RadarSetup {
                inr_db,
                radar: self.radar.clone(),
                link: self.radar_link,
                t0: self.t0,
            }),
            horizon_blocks: self.warmup_blocks + self.duration_blocks,
            cqi_backoff_db: self.cqi_backoff_db,
            seed: self.seed,
        }
    }
}

/// One transmission of one scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockTrace {
    pub block: u64,
    pub mcs: usize,
    /// 0 for a first transmission.
    pub attempt: u8,
    pub crc: bool,
    /// CQI measured in this block by the scheme's estimator.
    pub cqi: u8,
    pub predicted_impaired: bool,
    pub radar_hit: bool,
}

/// One CSI report as sent at the end of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTrace {
    pub window: u64,
    /// First block the report is in force for.
    pub start: u64,
    pub cqi_fading: u8,
    pub cqi_impaired: Option<u8>,
    /// Radar indicator bits; empty for single reports.
    pub indicator: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkMetrics {
    pub scheme: Scheme,
    pub throughput_bps: f64,
    pub bler: f64,
    pub mean_latency_ms: f64,
    pub transmissions: u64,
    pub failures: u64,
    pub new_blocks: u64,
    pub lost_blocks: u64,
    pub trace: Vec<BlockTrace>,
    pub reports: Vec<ReportTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub metrics: Vec<LinkMetrics>,
    /// Genie bound over the same blocks.
    pub max_rate_bps: f64,
    /// Efficiency of the top MCS times data REs per second.
    pub peak_rate_bps: f64,
}

/// Mean HARQ delay `bler·τ/(1 − bler)` of independent retransmissions.
pub fn harq_latency(bler: f64, tau_wait: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&bler) {
        return Err(Error::Input(format!("HARQ latency diverges for BLER {bler}")));
    }
    Ok(bler * tau_wait / (1.0 - bler))
}

/// Block error rate link adaptation aims for.
pub const BLER_TARGET: f64 = 0.1;

/// Bits per RE of a genie that knows the block's true SINR: the most
/// efficient MCS meeting the BLER target, scaled by `1 - target`. Zero
/// when no MCS meets the target.
pub fn genie_efficiency(table: &McsTable, truth_eesm: &[f64; 3]) -> f64 {
    table
        .entries
        .iter()
        .filter(|e| bler_model(truth_eesm[e.modulation.index()], e) <= BLER_TARGET)
        .map(|e| e.efficiency * (1.0 - BLER_TARGET))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy)]
struct Tb {
    mcs: usize,
    attempt: u8,
}

enum InForce {
    Single(u8),
    Dual(DualCsiReport),
}

struct SchemeState {
    scheme: Scheme,
    tag: u64,
    detector: Option<HybridEstimator>,
    cqis: Vec<u8>,
    flags: Vec<bool>,
    pending: VecDeque<(u64, InForce)>,
    active: Option<(u64, InForce)>,
    retx: HashMap<u64, Tb>,
    bits: f64,
    tx: u64,
    fail: u64,
    new: u64,
    lost: u64,
    trace: Vec<BlockTrace>,
    reports: Vec<ReportTrace>,
}

impl SchemeState {
    fn mcs_for(&self, b: u64, table: &McsTable) -> usize {
        match &self.active {
            None => 0,
            Some((_, InForce::Single(cqi))) => table.mcs_for_cqi(*cqi),
            Some((start, InForce::Dual(r))) => table.mcs_for_cqi(r.cqi_for((b - start) as usize)),
        }
    }
}

/// Runs every scheme of `cfg` over the same channel, radar and noise.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    run_with_table(cfg, McsTable::default_table())
}

pub fn run_with_table(cfg: &ScenarioConfig, table: McsTable) -> Result<ScenarioResult> {
    cfg.validate()?;
    let chain = PhyChain::new(cfg.chain_config(), table)?;
    let table = &chain.table;
    let n_data = chain.n_data() as f64;
    let tb = chain.geom.block_duration();
    let rtt = cfg.rtt_blocks();
    let t_csi = cfg.t_csi as u64;
    let first = cfg.warmup_blocks;
    let end = first + cfg.duration_blocks;

    let mut states = cfg
        .schemes
        .iter()
        .enumerate()
        .map(|(i, &scheme)| {
            Ok(SchemeState {
                scheme,
                tag: i as u64,
                detector: if scheme.needs_detector() { Some(HybridEstimator::new(cfg.detector)?) } else { None },
                cqis: Vec::with_capacity(cfg.t_csi),
                flags: Vec::with_capacity(cfg.t_csi),
                pending: VecDeque::new(),
                active: None,
                retx: HashMap::new(),
                bits: 0.0,
                tx: 0,
                fail: 0,
                new: 0,
                lost: 0,
                trace: Vec::new(),
                reports: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut genie = 0.0;
    for b in 0..end {
        let pb = chain.block(b)?;
        let measured = b >= first;
        if measured {
            genie += genie_efficiency(table, &pb.truth_eesm);
        }
        for st in states.iter_mut() {
            while st.pending.front().is_some_and(|(s, _)| *s <= b) {
                st.active = st.pending.pop_front();
            }
            let tbk = match st.retx.remove(&b) {
                Some(t) => t,
                None => Tb { mcs: st.mcs_for(b, table), attempt: 0 },
            };
            let entry = table.entry(tbk.mcs);
            let bler = bler_model(pb.truth_eesm[entry.modulation.index()], entry);
            let pass = crc_pass(bler, pb.u_crc);

            let (cqi, predicted) = match &mut st.detector {
                None => (pb.pilot_cqi, false),
                Some(det) => {
                    let (grid, y) = chain.transmit(&pb, entry.modulation, st.tag);
                    let obs = BlockObservation {
                        grid: &grid,
                        constellation: chain.constellation(entry.modulation),
                        h_est: &pb.h_est,
                        y: &y,
                        pilot_sinr: &pb.pilot_sinr,
                    };
                    let mut report = det.process(&obs)?;
                    let predicted = report.predicted_pulses > 0;
                    let cqi = match st.scheme.estimator {
                        Estimator::Pilot => pb.pilot_cqi,
                        Estimator::Hybrid => {
                            if let (true, true, Detection::NonPilotImpaired { symbols }) =
                                (cfg.reconstruction, pass, &report.detection)
                            {
                                reconstruct(&mut report.sinr, &grid, &y, symbols, cfg.detector.k_rb)?;
                            }
                            chain.cqi(&report.sinr.data_values())?
                        }
                    };
                    (cqi, predicted)
                }
            };

            // HARQ bookkeeping.
            if pass {
                if measured {
                    st.bits += entry.efficiency * n_data;
                }
            } else if tbk.attempt < cfg.harq_max_retx {
                st.retx.insert(b + rtt, Tb { attempt: tbk.attempt + 1, ..tbk });
            } else if measured {
                st.lost += 1;
            }
            if measured {
                st.tx += 1;
                st.fail += u64::from(!pass);
                st.new += u64::from(tbk.attempt == 0);
                if cfg.keep_trace {
                    st.trace.push(BlockTrace {
                        block: b,
                        mcs: tbk.mcs,
                        attempt: tbk.attempt,
                        crc: pass,
                        cqi,
                        predicted_impaired: predicted,
                        radar_hit: pb.radar_hit,
                    });
                }
            }

            // CSI window.
            st.cqis.push(cqi);
            st.flags.push(predicted);
            if (b + 1) % t_csi == 0 {
                let start = b + 1 + cfg.csi_delay as u64;
                let report = match st.scheme.feedback {
                    Feedback::Single(stat) => InForce::Single(quantize_window(&st.cqis, stat)?),
                    Feedback::Dual => {
                        let det = st.detector.as_ref().expect("dual feedback runs a detector");
                        let pred = det.tracker().predict(start, cfg.t_csi);
                        let bits = indicator_bits(&pred, start, cfg.t_csi);
                        InForce::Dual(dual_csi_report(&st.cqis, &st.flags, bits, cfg.dual_stats)?)
                    }
                };
                if cfg.keep_trace && b >= first {
                    let (cqi_fading, cqi_impaired, indicator) = match &report {
                        InForce::Single(c) => (*c, None, Vec::new()),
                        InForce::Dual(r) => (r.fading.cqi, r.impaired.map(|i| i.cqi), r.radar_indicator.clone()),
                    };
                    st.reports.push(ReportTrace { window: b / t_csi, start, cqi_fading, cqi_impaired, indicator });
                }
                st.pending.push_back((start, report));
                st.cqis.clear();
                st.flags.clear();
            }
        }
    }

    let seconds = cfg.duration_blocks as f64 * tb;
    let metrics = states
        .into_iter()
        .map(|st| {
            let bler = if st.tx == 0 { 0.0 } else { st.fail as f64 / st.tx as f64 };
            let retx = st.tx - st.new;
            let mean_latency_ms =
                if st.new == 0 { 0.0 } else { retx as f64 * cfg.tau_wait * 1e3 / st.new as f64 };
            LinkMetrics {
                scheme: st.scheme,
                throughput_bps: st.bits / seconds,
                bler,
                mean_latency_ms,
                transmissions: st.tx,
                failures: st.fail,
                new_blocks: st.new,
                lost_blocks: st.lost,
                trace: st.trace,
                reports: st.reports,
            }
        })
        .collect();
    let top = table.entries.last().expect("table is non-empty").efficiency;
    Ok(ScenarioResult {
        metrics,
        max_rate_bps: genie * n_data / seconds,
        peak_rate_bps: top * n_data / tb,
    })
}

/// Overwrites the detected symbols' SINR with the decoded-symbol value of
/// each coherence block.
fn reconstruct(
    sinr: &mut crate::detector::SinrGrid,
    grid: &crate::phy::ResourceGrid,
    y: &[num_complex::Complex64],
    symbols: &[usize],
    k_rb: usize,
) -> Result<()> {
    let nk = grid.n_subcarriers;
    for &n in symbols {
        for lo in (0..nk).step_by(k_rb) {
            let ks: Vec<usize> = (lo..(lo + k_rb).min(nk)).filter(|&k| grid.role(n, k) == Role::Data).collect();
            if ks.is_empty() {
                continue;
            }
            let x: Vec<_> = ks.iter().map(|&k| grid.symbol(n, k)).collect();
            let yy: Vec<_> = ks.iter().map(|&k| y[grid.index(n, k)]).collect();
            let v = reconstruction_block_sinr(&x, &yy, true, ks.len())?[0];
            for k in ks {
                sinr.set(n, k, v, crate::detector::SinrSource::Reconstruction);
            }
        }
    }
    Ok(())
}

/// Genie-adapted rate: per block the most efficient MCS meeting the BLER
/// target under the true SINR, averaged over the measured blocks.
pub fn max_achievable_rate(cfg: &ScenarioConfig) -> Result<f64> {
    cfg.validate()?;
    let chain = PhyChain::new(cfg.chain_config(), McsTable::default_table())?;
    let mut acc = 0.0;
    for b in cfg.warmup_blocks..cfg.warmup_blocks + cfg.duration_blocks {
        acc += genie_efficiency(&chain.table, &chain.block(b)?.truth_eesm);
    }
    let seconds = cfg.duration_blocks as f64 * chain.geom.block_duration();
    Ok(acc * chain.n_data() as f64 / seconds)
}
