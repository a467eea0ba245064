//! Semi-blind hybrid SINR estimation for periodic pulsed interference.
//!
//! Per block the receiver predicts from the tracked pulse repetition
//! whether radar lands in the block. Predicted-impaired blocks are split
//! into pilot-impaired ones (the pilot-aided SINR drops against a clean
//! reference and is trusted) and the rest, where the contaminated data
//! symbols are located and their SINR is replaced by the max-min
//! heuristic.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::heuristic::{d_max_sliced, sinr_from_dmax};
use crate::phy::{db, sinr_ceiling, ResourceGrid, Role};

pub const DEFAULT_PRI_WINDOW: usize = 500;
pub const DEFAULT_PEAK_THRESHOLD: f64 = 6.0;
pub const DEFAULT_GAMMA_TH_DB: f64 = 1.0;
pub const DEFAULT_NPI_MEMORY: usize = 8;

/// Guards `floor` against pulse times that land on a block boundary up to
/// rounding; such pulses belong to the later block.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriEstimate {
    /// Repetition frequency in Hz.
    pub f_rep: f64,
    /// Peak magnitude over the median magnitude of the non-DC bins.
    pub confidence: f64,
    pub window: usize,
}

/// Magnitudes of bins `0..=w/2` of the mean-removed series.
fn half_spectrum(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf.truncate(x.len() / 2 + 1);
    buf.iter().map(|c| c.norm()).collect()
}

/// Peak bin and its ratio to the median non-DC magnitude.
///
/// Among bins clearing `threshold × median`, the lowest-frequency one
/// within half of the strongest is taken. A pulse train has harmonics at
/// multiples of its rate and, once the floor to block indices jitters the
/// pulses, the fundamental is not always the single largest line.
fn spectral_peak(mags: &[f64], threshold: f64, scale: f64) -> Option<(usize, f64)> {
    let body = &mags[1..];
    let max = body.iter().cloned().fold(0.0, f64::max);
    // Only rounding noise is left once the series is constant.
    if max <= 1e-9 * scale {
        return None;
    }
    let mut sorted = body.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[(sorted.len() - 1) / 2];
    let floor = median.max(1e-12 * max);
    let qualifies = |m: f64| m >= threshold * floor;
    if !qualifies(max) {
        return None;
    }
    let bin = (0..body.len()).find(|&i| qualifies(body[i]) && body[i] >= 0.5 * max)?;
    Some((bin + 1, body[bin] / floor))
}

/// Repetition frequency of the pulses in the last `window` samples of a
/// per-block power series, or `None` when no spectral line stands out.
pub fn estimate_prep(series: &[f64], window: usize, block_duration: f64, threshold: f64) -> Result<Option<PriEstimate>> {
    if window < 8 {
        return Err(Error::Input(format!("PRI window must be at least 8 blocks, got {window}")));
    }
    if series.len() < window {
        return Err(Error::Input(format!("series has {} blocks, window needs {window}", series.len())));
    }
    if !(block_duration > 0.0) || !(threshold > 0.0) {
        return Err(Error::Input("block duration and peak threshold must be positive".into()));
    }
    let x = &series[series.len() - window..];
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("power series contains non-finite values".into()));
    }
    let scale = x.iter().map(|v| v.abs()).sum::<f64>();
    let mags = half_spectrum(x);
    Ok(spectral_peak(&mags, threshold, scale).map(|(bin, confidence)| PriEstimate {
        f_rep: bin as f64 / (window as f64 * block_duration),
        confidence,
        window,
    }))
}

/// Blocks `[first, first + horizon)` holding a pulse leading edge, with the
/// number of edges in each. Pulses lie at `epoch + m / f_rep` for integer m.
pub fn predict_impaired_blocks(
    pri: Option<&PriEstimate>,
    epoch: f64,
    block_duration: f64,
    first: u64,
    horizon: usize,
) -> Result<BTreeMap<u64, u32>> {
    let pri = pri.ok_or_else(|| Error::Input("no PRI estimate to predict from".into()))?;
    if !(pri.f_rep > 0.0) || !(block_duration > 0.0) || !epoch.is_finite() {
        return Err(Error::Input("prediction needs a positive rate and block duration".into()));
    }
    let period = 1.0 / pri.f_rep;
    let end = first + horizon as u64;
    let t_lo = first as f64 * block_duration;
    let mut m = ((t_lo - epoch) / period).floor() as i64 - 1;
    let mut out = BTreeMap::new();
    loop {
        let t = epoch + m as f64 * period;
        let b = (t / block_duration + EDGE_EPS).floor();
        if b >= end as f64 {
            break;
        }
        if b >= first as f64 {
            *out.entry(b as u64).or_insert(0) += 1;
        }
        m += 1;
    }
    Ok(out)
}

/// A tracked pulse train: rate plus the leading-edge time of one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriLock {
    pub estimate: PriEstimate,
    /// Seconds from the start of block 0.
    pub epoch: f64,
}

impl PriLock {
    pub fn predict(&self, block_duration: f64, first: u64, horizon: usize) -> BTreeMap<u64, u32> {
        predict_impaired_blocks(Some(&self.estimate), self.epoch, block_duration, first, horizon)
            .expect("lock holds a valid estimate")
    }
}

/// Sum of `x` at the blocks hit by a train of period `p` and offset `tau`,
/// both in blocks.
fn fold_score(x: &[f64], p: f64, tau: f64) -> f64 {
    let w = x.len() as f64;
    let mut s = 0.0;
    let mut t = tau;
    while t < w {
        s += x[(t + EDGE_EPS).floor() as usize];
        t += p;
    }
    s
}

/// Best offset for period `p`: the centre of the widest run of maximal
/// fold scores, treating offsets as circular. Returns (score, offset, run).
fn best_offset(x: &[f64], p: f64, step: f64) -> (f64, f64, usize) {
    let n = ((p / step).ceil() as usize).max(1);
    let scores: Vec<f64> = (0..n).map(|i| fold_score(x, p, i as f64 * step)).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * (max.abs() + 1.0);
    let top: Vec<bool> = scores.iter().map(|&s| s >= max - tol).collect();
    let mut best = (0usize, 0usize);
    if top.iter().all(|&t| t) {
        return (max, 0.5 * p, n);
    }
    // Start scanning just after a non-maximal offset so wrapped runs stay whole.
    let start = top.iter().position(|&t| !t).unwrap_or(0);
    let mut run_start = None;
    for j in 1..=n {
        let i = (start + j) % n;
        match (top[i], run_start) {
            (true, None) => run_start = Some(j),
            (false, Some(s)) => {
                if j - s > best.1 {
                    best = (s, j - s);
                }
                run_start = None;
            }
            _ => {}
        }
    }
    let (s, len) = best;
    let centre = (start as f64 + s as f64 + 0.5 * (len as f64 - 1.0)) * step;
    (max, centre.rem_euclid(n as f64 * step).min(p - 1e-12), len)
}

/// Frequency in cycles per block maximizing the DTFT magnitude near `bin`.
fn refine_frequency(x: &[f64], bin: usize) -> f64 {
    let w = x.len() as f64;
    let mean = x.iter().sum::<f64>() / w;
    let dtft = |f: f64| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, &v) in x.iter().enumerate() {
            acc += Complex64::from_polar(v - mean, -TAU * f * t as f64);
        }
        acc.norm()
    };
    let mut best = (bin as f64 / w, 0.0);
    for i in -100..=100 {
        let f = (bin as f64 + i as f64 * 0.01) / w;
        if f <= 0.0 {
            continue;
        }
        let m = dtft(f);
        if m > best.1 {
            best = (f, m);
        }
    }
    best.0
}

/// Estimates rate and timing from a window of the feature series whose
/// first sample belongs to block `first`.
pub fn lock_onto(x: &[f64], first: u64, block_duration: f64, threshold: f64) -> Result<Option<PriLock>> {
    let Some(estimate) = estimate_prep(x, x.len(), block_duration, threshold)? else {
        return Ok(None);
    };
    let w = x.len() as f64;
    let bin = (estimate.f_rep * w * block_duration).round() as usize;
    let p0 = 1.0 / refine_frequency(x, bin);
    let mean = x.iter().sum::<f64>() / w;
    let centred: Vec<f64> = x.iter().map(|v| v - mean).collect();
    // Period candidates one twentieth of a block of drift apart across the window.
    let dp = 0.05 * p0 * p0 / w;
    let step = 0.01;
    let fits: Vec<(f64, f64, f64, usize)> = (-10..=10)
        .map(|j| {
            let p = p0 + j as f64 * dp;
            let (s, tau, run) = best_offset(&centred, p, step);
            (p, s, tau, run)
        })
        .collect();
    let max = fits.iter().map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * (max.abs() + 1.0);
    let top: Vec<&(f64, f64, f64, usize)> = fits.iter().filter(|f| f.1 >= max - tol).collect();
    let &(p, _, tau, _) = top[(top.len() - 1) / 2];
    Ok(Some(PriLock {
        estimate: PriEstimate { f_rep: 1.0 / (p * block_duration), ..estimate },
        epoch: (first as f64 + tau) * block_duration,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub window: usize,
    pub threshold: f64,
    /// Blocks between re-estimates once the window is full.
    pub refresh: usize,
    pub block_duration: f64,
}

impl TrackerConfig {
    pub fn new(block_duration: f64) -> Self {
        TrackerConfig { window: DEFAULT_PRI_WINDOW, threshold: DEFAULT_PEAK_THRESHOLD, refresh: 100, block_duration }
    }
}

/// Sliding-window PRI tracker fed one feature sample per block.
#[derive(Debug, Clone)]
pub struct PriTracker {
    cfg: TrackerConfig,
    history: VecDeque<f64>,
    seen: u64,
    lock: Option<PriLock>,
}

impl PriTracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        if cfg.window < 8 || cfg.refresh == 0 || !(cfg.block_duration > 0.0) || !(cfg.threshold > 0.0) {
            return Err(Error::Config("PRI tracker needs window >= 8, refresh >= 1 and positive durations".into()));
        }
        Ok(PriTracker { cfg, history: VecDeque::with_capacity(cfg.window), seen: 0, lock: None })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Index of the next block to be pushed.
    pub fn next_block(&self) -> u64 {
        self.seen
    }

    pub fn lock(&self) -> Option<&PriLock> {
        self.lock.as_ref()
    }

    pub fn push(&mut self, feature: f64) -> Result<()> {
        if !feature.is_finite() {
            return Err(Error::Input("non-finite PRI feature".into()));
        }
        if self.history.len() == self.cfg.window {
            self.history.pop_front();
        }
        self.history.push_back(feature);
        self.seen += 1;
        let w = self.cfg.window as u64;
        if self.seen >= w && (self.seen - w) % self.cfg.refresh as u64 == 0 {
            let x: Vec<f64> = self.history.iter().copied().collect();
            self.lock = lock_onto(&x, self.seen - w, self.cfg.block_duration, self.cfg.threshold)?;
        }
        Ok(())
    }

    /// Predicted pulse edges in `block`; zero without a lock.
    pub fn expected_pulses(&self, block: u64) -> u32 {
        self.predict(block, 1).get(&block).copied().unwrap_or(0)
    }

    pub fn predict(&self, first: u64, horizon: usize) -> BTreeMap<u64, u32> {
        match &self.lock {
            Some(l) => l.predict(self.cfg.block_duration, first, horizon),
            None => BTreeMap::new(),
        }
    }
}

/// Running memory of pilot-aided wideband SINR over clean blocks.
#[derive(Debug, Clone)]
pub struct NpiReference {
    memory: usize,
    values: VecDeque<f64>,
}

impl NpiReference {
    pub fn new(memory: usize) -> Result<Self> {
        if memory == 0 {
            return Err(Error::Config("reference memory must hold at least one block".into()));
        }
        Ok(NpiReference { memory, values: VecDeque::with_capacity(memory) })
    }

    pub fn push(&mut self, sinr_db: f64) {
        if self.values.len() == self.memory {
            self.values.pop_front();
        }
        self.values.push_back(sinr_db);
    }

    /// Lower median of the remembered values.
    pub fn reference(&self) -> Option<f64> {
        if self.values.is_empty() {
            return None;
        }
        let mut v: Vec<f64> = self.values.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        Some(v[(v.len() - 1) / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contamination {
    PilotImpaired,
    NonPilotImpaired,
}

pub fn detect_pilot_contamination(current_db: f64, reference_db: f64, gamma_th_db: f64) -> Contamination {
    if reference_db - current_db >= gamma_th_db {
        Contamination::PilotImpaired
    } else {
        Contamination::NonPilotImpaired
    }
}

/// The `m` candidate symbols with the largest SINR-weighted slicing
/// residual, most likely first. `y` is the bias-free equalized block and
/// `pilot_sinr` the pilot-aided per-RE SINR, both symbol-major.
pub fn detect_contaminated_symbol(
    y: &[Complex64],
    pilot_sinr: &[f64],
    grid: &ResourceGrid,
    c: &Constellation,
    candidates: &[usize],
    m: usize,
) -> Result<Vec<usize>> {
    let nk = grid.n_subcarriers;
    if y.len() != grid.symbols().len() || pilot_sinr.len() != y.len() {
        return Err(Error::Input("equalized block, SINR grid and layout sizes differ".into()));
    }
    if m == 0 {
        return Err(Error::Input("expected pulse count must be at least 1".into()));
    }
    let mut scored = Vec::with_capacity(candidates.len());
    for &n in candidates {
        if n >= grid.n_symbols {
            return Err(Error::Input(format!("candidate symbol {n} outside the block")));
        }
        let (mut acc, mut count) = (0.0, 0usize);
        for k in 0..nk {
            if grid.role(n, k) != Role::Data {
                continue;
            }
            let i = grid.index(n, k);
            let r = if y[i].is_finite() { (y[i] - c.point(c.slice(y[i]))).norm_sqr() } else { f64::MAX };
            acc += pilot_sinr[i] * r;
            count += 1;
        }
        if count > 0 {
            scored.push((n, -acc / count as f64));
        }
    }
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().take(m).map(|(n, _)| n).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinrSource {
    Pilot,
    Heuristic,
    Reconstruction,
}

/// Per-RE SINR estimate with the estimator that produced it; pilot REs
/// carry no estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrGrid {
    pub n_symbols: usize,
    pub n_subcarriers: usize,
    pub values: Vec<f64>,
    pub sources: Vec<Option<SinrSource>>,
}

impl SinrGrid {
    pub fn from_pilot(grid: &ResourceGrid, pilot_sinr: &[f64]) -> Result<Self> {
        if pilot_sinr.len() != grid.symbols().len() {
            return Err(Error::Input("pilot SINR grid size differs from the layout".into()));
        }
        let sources = grid.roles().iter().map(|r| (*r == Role::Data).then_some(SinrSource::Pilot)).collect();
        Ok(SinrGrid {
            n_symbols: grid.n_symbols,
            n_subcarriers: grid.n_subcarriers,
            values: pilot_sinr.to_vec(),
            sources,
        })
    }

    pub fn source(&self, symbol: usize, k: usize) -> Option<SinrSource> {
        self.sources[symbol * self.n_subcarriers + k]
    }

    /// Estimates over data REs in grid order.
    pub fn data_values(&self) -> Vec<f64> {
        self.values.iter().zip(&self.sources).filter(|(_, s)| s.is_some()).map(|(v, _)| *v).collect()
    }

    pub fn set(&mut self, symbol: usize, k: usize, value: f64, source: SinrSource) {
        let i = symbol * self.n_subcarriers + k;
        if self.sources[i].is_some() {
            self.values[i] = value;
            self.sources[i] = Some(source);
        }
    }
}

/// Outcome of the detection chain for one block.
#[derive(Debug, Clone, PartialEq)]
pub enum Detection {
    Clean,
    PilotImpaired,
    NonPilotImpaired { symbols: Vec<usize> },
}

/// Per-RE hybrid SINR: pilot-aided everywhere except the data REs of
/// detected non-pilot symbols, which take the max-min estimate of their
/// coherence block.
pub fn hybrid_sinr_grid(
    grid: &ResourceGrid,
    y: &[Complex64],
    pilot_sinr: &[f64],
    c: &Constellation,
    k_rb: usize,
    detection: Option<&Detection>,
) -> Result<SinrGrid> {
    let detection = detection.ok_or_else(|| Error::Contract("block has no detection outcome".into()))?;
    if y.len() != grid.symbols().len() {
        return Err(Error::Input("equalized block size differs from the layout".into()));
    }
    if k_rb == 0 {
        return Err(Error::Input("coherence block size must be positive".into()));
    }
    let mut out = SinrGrid::from_pilot(grid, pilot_sinr)?;
    let Detection::NonPilotImpaired { symbols } = detection else {
        return Ok(out);
    };
    if symbols.is_empty() {
        return Err(Error::Contract("non-pilot impairment without a detected symbol".into()));
    }
    let signal_power = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.order() as f64;
    let nk = grid.n_subcarriers;
    for &n in symbols {
        if n >= grid.n_symbols {
            return Err(Error::Input(format!("detected symbol {n} outside the block")));
        }
        for lo in (0..nk).step_by(k_rb) {
            let ks: Vec<usize> = (lo..(lo + k_rb).min(nk)).filter(|&k| grid.role(n, k) == Role::Data).collect();
            if ks.is_empty() {
                continue;
            }
            let block: Vec<Complex64> = ks.iter().map(|&k| y[grid.index(n, k)]).collect();
            let v = sinr_from_dmax(d_max_sliced(&block, c), signal_power)?;
            for k in ks {
                out.set(n, k, v, SinrSource::Heuristic);
            }
        }
    }
    Ok(out)
}

/// Per-RE `|x|²/|x − y|²` from the decoded symbols, capped; only valid
/// once the block's CRC has passed.
pub fn reconstruction_sinr(x: &[Complex64], y: &[Complex64], crc_passed: bool) -> Result<Vec<f64>> {
    if !crc_passed {
        return Err(Error::Contract("reconstruction needs a block that passed its CRC".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Input("symbol and equalized vectors differ in length".into()));
    }
    Ok(x.iter().zip(y).map(|(a, b)| ratio(a.norm_sqr(), (a - b).norm_sqr())).collect())
}

/// Coherence-block form of [`reconstruction_sinr`]: `Σ|x|²/Σ|x − y|²` over
/// each run of `k_rb` entries.
pub fn reconstruction_block_sinr(x: &[Complex64], y: &[Complex64], crc_passed: bool, k_rb: usize) -> Result<Vec<f64>> {
    if !crc_passed {
        return Err(Error::Contract("reconstruction needs a block that passed its CRC".into()));
    }
    if x.len() != y.len() || k_rb == 0 {
        return Err(Error::Input("need equal-length vectors and a positive block size".into()));
    }
    Ok(x.chunks(k_rb)
        .zip(y.chunks(k_rb))
        .map(|(xs, ys)| {
            let s: f64 = xs.iter().map(|v| v.norm_sqr()).sum();
            let e: f64 = xs.iter().zip(ys).map(|(a, b)| (a - b).norm_sqr()).sum();
            ratio(s, e)
        })
        .collect())
}

fn ratio(s: f64, e: f64) -> f64 {
    if e <= 0.0 {
        sinr_ceiling()
    } else {
        (s / e).min(sinr_ceiling())
    }
}

/// Per-block series that exposes the radar repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriFeature {
    /// Largest per-symbol mean slicing residual `|z − ĥ x̂|²` over the
    /// median one. Fading scales every symbol of a block alike and cancels.
    SymbolContrast,
    /// Mean slicing residual power over data REs.
    Residual,
    /// Mean received power over all REs.
    ReceivedPower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub tracker: TrackerConfig,
    pub gamma_th_db: f64,
    pub npi_memory: usize,
    pub k_rb: usize,
    pub feature: PriFeature,
}

impl DetectorConfig {
    pub fn new(block_duration: f64) -> Self {
        DetectorConfig {
            tracker: TrackerConfig::new(block_duration),
            gamma_th_db: DEFAULT_GAMMA_TH_DB,
            npi_memory: DEFAULT_NPI_MEMORY,
            k_rb: crate::heuristic::DEFAULT_K_RB,
            feature: PriFeature::SymbolContrast,
        }
    }
}

/// What the receiver knows about one block after equalization.
#[derive(Debug, Clone, Copy)]
pub struct BlockObservation<'a> {
    pub grid: &'a ResourceGrid,
    pub constellation: &'a Constellation,
    pub h_est: &'a [Complex64],
    /// Bias-free equalized symbols `z / ĥ`.
    pub y: &'a [Complex64],
    pub pilot_sinr: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub block: u64,
    pub predicted_pulses: u32,
    pub detection: Detection,
    /// Mean pilot-aided SINR over data REs, dB.
    pub pilot_avg_db: f64,
    pub feature: f64,
    pub sinr: SinrGrid,
}

/// Detection chain state owned by one receiver.
#[derive(Debug, Clone)]
pub struct HybridEstimator {
    cfg: DetectorConfig,
    tracker: PriTracker,
    npi: NpiReference,
}

impl HybridEstimator {
    pub fn new(cfg: DetectorConfig) -> Result<Self> {
        if cfg.k_rb == 0 {
            return Err(Error::Config("coherence block size must be positive".into()));
        }
        Ok(HybridEstimator { tracker: PriTracker::new(cfg.tracker)?, npi: NpiReference::new(cfg.npi_memory)?, cfg })
    }

    pub fn tracker(&self) -> &PriTracker {
        &self.tracker
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    /// Runs the chain on the next block and feeds its feature to the tracker.
    pub fn process(&mut self, obs: &BlockObservation<'_>) -> Result<BlockReport> {
        let grid = obs.grid;
        let n = grid.symbols().len();
        if obs.h_est.len() != n || obs.y.len() != n || obs.pilot_sinr.len() != n {
            return Err(Error::Input("observation sizes differ from the layout".into()));
        }
        let block = self.tracker.next_block();
        let predicted = self.tracker.expected_pulses(block);
        let c = obs.constellation;

        let nk = grid.n_subcarriers;
        let (mut sum, mut count) = (0.0, 0usize);
        let mut per_symbol = vec![0.0; grid.n_symbols];
        for (i, role) in grid.roles().iter().enumerate() {
            if *role == Role::Data {
                sum += obs.pilot_sinr[i];
                if obs.y[i].is_finite() {
                    per_symbol[i / nk] +=
                        obs.h_est[i].norm_sqr() * (obs.y[i] - c.point(c.slice(obs.y[i]))).norm_sqr();
                }
                count += 1;
            }
        }
        let pilot_avg_db = db(sum / count as f64);
        let resid = per_symbol.iter().sum::<f64>() / count as f64;
        for (sym, r) in per_symbol.iter_mut().enumerate() {
            let data = (0..nk).filter(|&k| grid.role(sym, k) == Role::Data).count();
            *r /= data.max(1) as f64;
        }
        let feature = match self.cfg.feature {
            PriFeature::SymbolContrast => {
                let mut sorted = per_symbol.clone();
                sorted.sort_by(f64::total_cmp);
                let median = sorted[(sorted.len() - 1) / 2];
                let max = sorted[sorted.len() - 1];
                if median > 0.0 {
                    max / median
                } else {
                    f64::from(u8::from(max > 0.0))
                }
            }
            PriFeature::Residual => resid,
            PriFeature::ReceivedPower => {
                obs.h_est.iter().zip(obs.y).map(|(h, y)| (h * y).norm_sqr()).sum::<f64>() / n as f64
            }
        };

        let detection = if predicted == 0 {
            self.npi.push(pilot_avg_db);
            Detection::Clean
        } else {
            let contamination = match self.npi.reference() {
                Some(r) => detect_pilot_contamination(pilot_avg_db, r, self.cfg.gamma_th_db),
                None => Contamination::NonPilotImpaired,
            };
            match contamination {
                Contamination::PilotImpaired => Detection::PilotImpaired,
                Contamination::NonPilotImpaired => {
                    let candidates = grid.non_pilot_symbols();
                    let symbols =
                        detect_contaminated_symbol(obs.y, obs.pilot_sinr, grid, c, &candidates, predicted as usize)?;
                    Detection::NonPilotImpaired { symbols }
                }
            }
        };
        let sinr = hybrid_sinr_grid(grid, obs.y, obs.pilot_sinr, c, self.cfg.k_rb, Some(&detection))?;
        self.tracker.push(feature)?;
        Ok(BlockReport { block, predicted_pulses: predicted, detection, pilot_avg_db, feature, sinr })
    }
}

#[cfg(test)]
mod tests;
