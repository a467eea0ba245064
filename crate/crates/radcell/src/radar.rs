//! LFM pulse synthesis and its projection onto the OFDM resource grid.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::phy::numerology::OfdmGeometry;

/// How the carrier phase of successive pulses is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulsePhase {
    /// Independent uniform phase per pulse.
    RandomPerPulse,
    /// Every pulse starts with `phase0`.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadarConfig {
    pub p_rad: f64,
    /// Pulse width in seconds.
    pub t_pul: f64,
    /// Sweep bandwidth in Hz.
    pub f_s: f64,
    /// Carrier offset in Hz.
    pub delta_f_r: f64,
    /// Pulse repetition interval in seconds.
    pub t_rep: f64,
    pub phase0: f64,
    pub phase_mode: PulsePhase,
    /// Leading edge of the first pulse in seconds.
    pub t0: f64,
    /// Time-bandwidth product below which the stationary-phase spectrum is flagged.
    pub min_time_bandwidth: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        RadarConfig {
            p_rad: 1.0,
            t_pul: 5e-6,
            f_s: 5e6,
            delta_f_r: 0.0,
            t_rep: 3.125e-3,
            phase0: 0.0,
            phase_mode: PulsePhase::RandomPerPulse,
            t0: 0.0,
            min_time_bandwidth: 10.0,
        }
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_pul > 0.0) {
            return Err(Error::Config(format!("pulse width must be positive, got {}", self.t_pul)));
        }
        if !(self.t_rep > self.t_pul) {
            return Err(Error::Config("repetition interval must exceed the pulse width".into()));
        }
        if !(self.f_s > 0.0) {
            return Err(Error::Config("sweep bandwidth must be positive".into()));
        }
        if !(self.p_rad >= 0.0) || !self.p_rad.is_finite() {
            return Err(Error::Config("radar power must be finite and non-negative".into()));
        }
        if !self.t0.is_finite() || !self.phase0.is_finite() || !self.delta_f_r.is_finite() {
            return Err(Error::Config("radar timing and phase must be finite".into()));
        }
        Ok(())
    }

    pub fn time_bandwidth(&self) -> f64 {
        self.f_s * self.t_pul
    }

    pub fn spectrum_approx_valid(&self) -> bool {
        self.time_bandwidth() >= self.min_time_bandwidth
    }

    pub fn f_rep(&self) -> f64 {
        1.0 / self.t_rep
    }
}

/// Complex baseband LFM pulse centred on `t = 0`.
pub fn lfm_pulse(t: f64, cfg: &RadarConfig) -> Complex64 {
    if t.abs() > 0.5 * cfg.t_pul {
        return Complex64::new(0.0, 0.0);
    }
    let phase = (PI * cfg.f_s * t / cfg.t_pul + TAU * cfg.delta_f_r) * t + cfg.phase0;
    Complex64::from_polar(cfg.p_rad.sqrt(), phase)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    pub value: Complex64,
    /// False when the time-bandwidth product is too small for the approximation.
    pub valid: bool,
}

/// Stationary-phase approximation of the pulse spectrum at baseband frequency `f`.
pub fn lfm_spectrum_approx(f: f64, cfg: &RadarConfig) -> SpectrumSample {
    let mag = (cfg.p_rad * cfg.t_pul / cfg.f_s).sqrt();
    let df = f - cfg.delta_f_r;
    let phase = -(PI * cfg.t_pul * df * df / cfg.f_s + FRAC_PI_4) + cfg.phase0;
    SpectrumSample { value: Complex64::from_polar(mag, phase), valid: cfg.spectrum_approx_valid() }
}

/// Pulse arrivals over a horizon; arrival times are leading edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    pub arrivals: Vec<f64>,
    /// Carrier phase of each pulse.
    pub phases: Vec<f64>,
}

impl PulseTrain {
    /// All pulses with leading edge in `[t0, horizon)`; per-pulse phases are
    /// drawn from `seed` when the phase mode is random.
    pub fn new(cfg: &RadarConfig, horizon: f64, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut arrivals = Vec::new();
        let mut phases = Vec::new();
        let mut m = 0u64;
        loop {
            let t = cfg.t0 + m as f64 * cfg.t_rep;
            if t >= horizon {
                break;
            }
            arrivals.push(t);
            phases.push(match cfg.phase_mode {
                PulsePhase::RandomPerPulse => rng.random::<f64>() * TAU,
                PulsePhase::Fixed => cfg.phase0,
            });
            m += 1;
        }
        Ok(PulseTrain { arrivals, phases })
    }

    pub fn empty() -> Self {
        PulseTrain { arrivals: Vec::new(), phases: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    /// Indices of pulses whose support intersects `[a, b)`.
    pub fn overlapping(&self, a: f64, b: f64, t_pul: f64) -> std::ops::Range<usize> {
        let lo = self.arrivals.partition_point(|&t| t + t_pul <= a);
        let hi = self.arrivals.partition_point(|&t| t < b);
        lo..hi.max(lo)
    }
}

/// Interference landing on one OFDM symbol of a block.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolHit {
    pub symbol: usize,
    pub pulse: usize,
    /// Coefficient per used subcarrier.
    pub coeffs: Vec<Complex64>,
}

/// Per-RE interference for one block; symbols without an entry are clean.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockInterference {
    pub hits: Vec<SymbolHit>,
}

impl BlockInterference {
    pub fn is_clean(&self) -> bool {
        self.hits.is_empty()
    }

    /// Interference on RE (n, k), summed over pulses.
    pub fn at(&self, symbol: usize, k: usize) -> Complex64 {
        self.hits.iter().filter(|h| h.symbol == symbol).map(|h| h.coeffs[k]).sum()
    }

    /// Energy per symbol over used subcarriers.
    pub fn symbol_energy(&self, n_symbols: usize) -> Vec<f64> {
        let mut e = vec![0.0; n_symbols];
        for h in &self.hits {
            e[h.symbol] += h.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
        e
    }

    /// Symbol carrying the most interference energy, if any.
    pub fn dominant_symbol(&self, n_symbols: usize) -> Option<usize> {
        let e = self.symbol_energy(n_symbols);
        (0..n_symbols).filter(|&n| e[n] > 0.0).max_by(|&a, &b| e[a].total_cmp(&e[b]))
    }
}

/// Projects radar pulses onto the resource grid through the demodulator DFT.
pub struct InterferenceMapper {
    geom: OfdmGeometry,
    cfg: RadarConfig,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for InterferenceMapper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InterferenceMapper").field("n_fft", &self.geom.n_fft).finish()
    }
}

impl InterferenceMapper {
    pub fn new(geom: &OfdmGeometry, cfg: &RadarConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.t_pul > geom.useful_duration() {
            return Err(Error::Unsupported(format!(
                "pulse width {:.3e} s exceeds the useful symbol duration {:.3e} s",
                cfg.t_pul,
                geom.useful_duration()
            )));
        }
        let fft = FftPlanner::new().plan_fft_forward(geom.n_fft);
        Ok(InterferenceMapper { geom: geom.clone(), cfg: cfg.clone(), fft })
    }

    pub fn config(&self) -> &RadarConfig {
        &self.cfg
    }

    /// Unitary DFT over all bins of the pulse segment seen by symbol
    /// `symbol` of a block starting at `block_start`.
    pub fn symbol_spectrum(&self, block_start: f64, symbol: usize, arrival: f64, phase: f64) -> Vec<Complex64> {
        let fs = self.geom.sample_rate();
        let n = self.geom.n_fft;
        let t_first = block_start + self.geom.useful_start(symbol);
        let centre = arrival + 0.5 * self.cfg.t_pul;
        let cfg = RadarConfig { phase0: phase, ..self.cfg.clone() };
        let mut buf: Vec<Complex64> = (0..n).map(|s| lfm_pulse(t_first + s as f64 / fs - centre, &cfg)).collect();
        self.fft.process(&mut buf);
        let norm = 1.0 / (n as f64).sqrt();
        for v in &mut buf {
            *v *= norm;
        }
        buf
    }

    /// Interference on every RE of block `block` with the given per-pulse
    /// radar-link gains (indexed like the train).
    pub fn re_interference_map(&self, train: &PulseTrain, block: u64, gains: &[Complex64]) -> Result<BlockInterference> {
        if gains.len() < train.len() {
            return Err(Error::Input("one radar-link gain per pulse is required".into()));
        }
        let g = &self.geom;
        let block_start = block as f64 * g.block_duration();
        let block_end = block_start + g.block_duration();
        let mut out = BlockInterference::default();
        for p in train.overlapping(block_start, block_end, self.cfg.t_pul) {
            let (a, b) = (train.arrivals[p], train.arrivals[p] + self.cfg.t_pul);
            for n in 0..g.n_symbols {
                let u0 = block_start + g.useful_start(n);
                let u1 = u0 + g.useful_duration();
                if b <= u0 || a >= u1 {
                    continue;
                }
                let spec = self.symbol_spectrum(block_start, n, a, train.phases[p]);
                let coeffs: Vec<Complex64> =
                    (0..g.n_subcarriers()).map(|k| gains[p] * spec[g.dft_index(k)]).collect();
                if coeffs.iter().any(|c| c.norm_sqr() > 0.0) {
                    out.hits.push(SymbolHit { symbol: n, pulse: p, coeffs });
                }
            }
        }
        Ok(out)
    }

    /// Mean per-subcarrier interference power of a pulse centred in a
    /// symbol's useful window, at unit gain.
    pub fn contained_pulse_power(&self) -> f64 {
        let g = &self.geom;
        let arrival = g.symbol_centre(1) - 0.5 * self.cfg.t_pul;
        let spec = self.symbol_spectrum(0.0, 1, arrival, 0.0);
        let n_sc = g.n_subcarriers();
        (0..n_sc).map(|k| spec[g.dft_index(k)].norm_sqr()).sum::<f64>() / n_sc as f64
    }

    /// Radar power that gives a contained pulse the target mean per-RE power.
    pub fn calibrate_p_rad(&self, target_power: f64) -> f64 {
        let unit = RadarConfig { p_rad: 1.0, ..self.cfg.clone() };
        let mapper = InterferenceMapper { geom: self.geom.clone(), cfg: unit, fft: Arc::clone(&self.fft) };
        target_power / mapper.contained_pulse_power()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_cfg() -> RadarConfig {
        RadarConfig { t0: 0.412_345e-3, ..RadarConfig::default() }
    }

    #[test]
    fn pulse_shape() {
        let cfg = RadarConfig { p_rad: 4.0, ..table_cfg() };
        assert_eq!(lfm_pulse(0.0, &cfg), Complex64::new(2.0, 0.0));
        assert_eq!(lfm_pulse(cfg.t_pul, &cfg), Complex64::new(0.0, 0.0));
        // Constant envelope: the energy is P·T.
        let n = 200_000;
        let h = cfg.t_pul / n as f64;
        let e: f64 = (0..n).map(|i| lfm_pulse(-0.5 * cfg.t_pul + (i as f64 + 0.5) * h, &cfg).norm_sqr() * h).sum();
        assert!((e - 4.0 * cfg.t_pul).abs() / (4.0 * cfg.t_pul) < 1e-9);
    }

    #[test]
    fn approximate_spectrum_magnitude_and_phase() {
        let cfg = RadarConfig { p_rad: 2.0, delta_f_r: 1e5, ..table_cfg() };
        let want = cfg.p_rad * cfg.t_pul / cfg.f_s;
        for f in [-2e6, 0.0, 1e5, 3e6] {
            let s = lfm_spectrum_approx(f, &cfg);
            assert!((s.value.norm_sqr() - want).abs() < 1e-24);
            assert!(s.valid);
        }
        let s = lfm_spectrum_approx(1e5, &cfg);
        assert!((s.value.arg() + FRAC_PI_4).abs() < 1e-12);
        let short = RadarConfig { t_pul: 1e-6, f_s: 1e6, ..cfg };
        assert!(!lfm_spectrum_approx(0.0, &short).valid);
    }

    #[test]
    fn approximation_tracks_sampled_dft_in_band() {
        // Sample at 8x the sweep rate over a long window to get a dense spectrum.
        let cfg = table_cfg();
        let fs = 8.0 * cfg.f_s;
        let n = 8192;
        let mut buf: Vec<Complex64> =
            (0..n).map(|i| lfm_pulse((i as f64 - (n / 2) as f64) / fs, &cfg)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let mut worst: f64 = 0.0;
        for (i, v) in buf.iter().enumerate() {
            let bin = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
            let f = bin * fs / n as f64;
            if f.abs() > 0.4 * cfg.f_s {
                continue;
            }
            // Continuous-time spectrum from the sampled DFT.
            let measured = v.norm() / fs;
            let approx = lfm_spectrum_approx(f, &cfg).value.norm();
            worst = worst.max((20.0 * (measured / approx).log10()).abs());
        }
        assert!(worst <= 2.0, "worst deviation {worst} dB");
    }

    #[test]
    fn empty_and_single_symbol_hits() {
        let geom = OfdmGeometry::lte(50).unwrap();
        let cfg = RadarConfig { t0: geom.symbol_centre(3) - 2.5e-6, t_rep: 3e-3, ..table_cfg() };
        let mapper = InterferenceMapper::new(&geom, &cfg).unwrap();
        let train = PulseTrain::new(&cfg, 10e-3, 1).unwrap();
        let gains = vec![Complex64::new(1.0, 0.0); train.len()];
        let hit = mapper.re_interference_map(&train, 0, &gains).unwrap();
        assert_eq!(hit.hits.len(), 1);
        assert_eq!(hit.hits[0].symbol, 3);
        assert_eq!(hit.dominant_symbol(14), Some(3));
        let quiet = mapper.re_interference_map(&train, 1, &gains).unwrap();
        assert!(quiet.is_clean());
    }

    #[test]
    fn parseval_over_all_bins() {
        let geom = OfdmGeometry::lte(50).unwrap();
        let cfg = table_cfg();
        let mapper = InterferenceMapper::new(&geom, &cfg).unwrap();
        // Pulse straddling the end of symbol 5's useful window.
        let edge = geom.useful_start(5) + geom.useful_duration() - 2e-6;
        let spec = mapper.symbol_spectrum(0.0, 5, edge, 0.3);
        let fs = geom.sample_rate();
        let u0 = geom.useful_start(5);
        let time: f64 = (0..geom.n_fft)
            .map(|s| lfm_pulse(u0 + s as f64 / fs - edge - 0.5 * cfg.t_pul, &cfg).norm_sqr())
            .sum();
        let freq: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        assert!(time > 0.0);
        assert!((freq - time).abs() / time < 1e-6);
    }

    #[test]
    fn cyclic_prefix_only_overlap_is_dropped() {
        let geom = OfdmGeometry::lte(50).unwrap();
        // A 2 µs pulse that ends before the useful part of symbol 2 starts.
        let cfg = RadarConfig { t_pul: 2e-6, t0: geom.symbol_start(2) + 0.5e-6, t_rep: 2e-3, ..table_cfg() };
        let mapper = InterferenceMapper::new(&geom, &cfg).unwrap();
        let train = PulseTrain::new(&cfg, 1e-3, 0).unwrap();
        let map = mapper.re_interference_map(&train, 0, &[Complex64::new(1.0, 0.0)]).unwrap();
        assert!(map.is_clean());
    }

    #[test]
    fn rejects_pulse_longer_than_symbol() {
        let geom = OfdmGeometry::lte(50).unwrap();
        let cfg = RadarConfig { t_pul: 80e-6, ..table_cfg() };
        assert!(matches!(InterferenceMapper::new(&geom, &cfg), Err(Error::Unsupported(_))));
    }

    #[test]
    fn shifting_epoch_by_one_interval_shifts_pulse_index() {
        let geom = OfdmGeometry::lte(25).unwrap();
        let cfg = RadarConfig { phase_mode: PulsePhase::Fixed, ..table_cfg() };
        let later = RadarConfig { t0: cfg.t0 + cfg.t_rep, ..cfg.clone() };
        let mapper = InterferenceMapper::new(&geom, &cfg).unwrap();
        let a = PulseTrain::new(&cfg, 20e-3, 0).unwrap();
        let b = PulseTrain::new(&later, 20e-3, 0).unwrap();
        assert_eq!(a.len(), b.len() + 1);
        assert!(a.arrivals[1..].iter().zip(&b.arrivals).all(|(x, y)| (x - y).abs() < 1e-15));
        let ga = vec![Complex64::new(1.0, 0.0); a.len()];
        for block in 4..20 {
            let ma = mapper.re_interference_map(&a, block, &ga).unwrap();
            let mb = mapper.re_interference_map(&b, block, &ga[..b.len()]).unwrap();
            assert_eq!(ma.hits.len(), mb.hits.len());
            for (x, y) in ma.hits.iter().zip(&mb.hits) {
                assert_eq!(x.pulse, y.pulse + 1);
                let worst = x.coeffs.iter().zip(&y.coeffs).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
                assert!(worst < 1e-9, "{worst}");
            }
        }
    }

    #[test]
    fn contained_pulse_is_flat_within_coherence_blocks() {
        let geom = OfdmGeometry::lte(50).unwrap();
        let cfg = table_cfg();
        let mapper = InterferenceMapper::new(&geom, &cfg).unwrap();
        let spec = mapper.symbol_spectrum(0.0, 2, geom.symbol_centre(2) - 2.5e-6, 0.0);
        let mut checked = 0;
        for b in 0..geom.coherence_blocks() {
            let ks: Vec<usize> = (b * 12..(b + 1) * 12).collect();
            // Only blocks well inside the sweep band carry the pulse energy.
            if ks.iter().any(|&k| geom.subcarrier_freq(k).abs() > 0.4 * cfg.f_s) {
                continue;
            }
            let mags: Vec<f64> = ks.iter().map(|&k| spec[geom.dft_index(k)].norm()).collect();
            let mean = mags.iter().sum::<f64>() / 12.0;
            let sd = (mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / 12.0).sqrt();
            assert!(sd < 0.1 * mean, "block {b}: sd/mean {}", sd / mean);
            checked += 1;
        }
        assert!(checked >= 20);
    }

    #[test]
    fn calibration_hits_the_target_power() {
        let geom = OfdmGeometry::lte(50).unwrap();
        let cfg = table_cfg();
        let mapper = InterferenceMapper::new(&geom, &cfg).unwrap();
        let p = mapper.calibrate_p_rad(0.37);
        let scaled = InterferenceMapper::new(&geom, &RadarConfig { p_rad: p, ..cfg }).unwrap();
        assert!((scaled.contained_pulse_power() - 0.37).abs() < 1e-12);
    }
    #[test]
    fn square_law_phases_look_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 5000;
        let mut ph: Vec<f64> = (0..n)
            .map(|_| {
                // Any block start on a 20 MHz grid, sweeps of 1-10 MHz, pulses of 1-100 µs.
                let k = rng.random_range(0..1188) as f64;
                let i = rng.random_range(1..=12) as f64;
                let f_s = rng.random_range(1e6..10e6);
                let t_pul = rng.random_range(1e-6..100e-6);
                let f = (k + i) * 15e3;
                (PI * t_pul * f * f / f_s).rem_euclid(TAU)
            })
            .collect();
        ph.sort_by(f64::total_cmp);
        let d = ph
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                let f = x / TAU;
                (f - j as f64 / n as f64).abs().max(((j + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample Kolmogorov–Smirnov statistic.
        assert!(d < 1.628 / (n as f64).sqrt(), "KS statistic {d}");
    }
}
