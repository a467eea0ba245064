//! Sum-of-sinusoids Rayleigh fading, the radar-to-UE link and AWGN.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::phy::numerology::OfdmGeometry;

/// 3GPP Extended Pedestrian A delays (ns) and relative powers (dB).
pub const EPA_DELAYS_NS: [f64; 7] = [0.0, 30.0, 70.0, 90.0, 110.0, 190.0, 410.0];
pub const EPA_POWERS_DB: [f64; 7] = [0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8];

/// Sinusoids per tap.
pub const DEFAULT_SINUSOIDS: usize = 32;

#[derive(Debug, Clone)]
struct Tap {
    delay: f64,
    amplitude: f64,
    /// Doppler shift of each sinusoid in Hz.
    shifts: Vec<f64>,
    phases: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FadingProcess {
    pub doppler: f64,
    taps: Vec<Tap>,
}

impl FadingProcess {
    /// Tapped delay line with `(delay s, linear power)` taps, normalized to unit total power.
    pub fn new(taps: &[(f64, f64)], doppler: f64, sinusoids: usize, seed: u64) -> Result<Self> {
        if !(doppler >= 0.0) || !doppler.is_finite() {
            return Err(Error::Config(format!("doppler must be finite and >= 0, got {doppler}")));
        }
        if taps.is_empty() || taps.iter().any(|&(d, p)| !(d >= 0.0) || !(p > 0.0)) {
            return Err(Error::Config("taps need non-negative delays and positive powers".into()));
        }
        if sinusoids == 0 {
            return Err(Error::Config("need at least one sinusoid per tap".into()));
        }
        let total: f64 = taps.iter().map(|t| t.1).sum();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = sinusoids as f64;
        let taps = taps
            .iter()
            .map(|&(delay, p)| {
                let theta: f64 = rng.random::<f64>() * TAU;
                let shifts = (0..sinusoids)
                    .map(|i| doppler * ((TAU * (i as f64 + 1.0) - PI + theta) / n).cos())
                    .collect();
                let phases = (0..sinusoids).map(|_| rng.random::<f64>() * TAU).collect();
                Tap { delay, amplitude: (p / total).sqrt(), shifts, phases }
            })
            .collect();
        Ok(FadingProcess { doppler, taps })
    }

    pub fn n_taps(&self) -> usize {
        self.taps.len()
    }

    pub fn tap_delays(&self) -> Vec<f64> {
        self.taps.iter().map(|t| t.delay).collect()
    }

    /// Complex gain of tap `l` at time `t`, including its power weight.
    pub fn tap_gain(&self, l: usize, t: f64) -> Complex64 {
        let tap = &self.taps[l];
        let norm = tap.amplitude / (tap.shifts.len() as f64).sqrt();
        let sum: Complex64 = tap
            .shifts
            .iter()
            .zip(&tap.phases)
            .map(|(&f, &ph)| {
                let (s, c) = (TAU * f * t + ph).sin_cos();
                Complex64::new(c, s)
            })
            .sum();
        sum * norm
    }

    /// Frequency response at time `t` and baseband frequency `f`.
    pub fn response(&self, t: f64, f: f64) -> Complex64 {
        (0..self.taps.len())
            .map(|l| self.tap_gain(l, t) * Complex64::from_polar(1.0, -TAU * f * self.taps[l].delay))
            .sum()
    }
}

/// EPA fading with the standard profile.
pub fn epa_fading(doppler: f64, seed: u64) -> Result<FadingProcess> {
    let taps: Vec<(f64, f64)> = EPA_DELAYS_NS
        .iter()
        .zip(EPA_POWERS_DB)
        .map(|(&d, p)| (d * 1e-9, 10f64.powf(p / 10.0)))
        .collect();
    FadingProcess::new(&taps, doppler, DEFAULT_SINUSOIDS, seed)
}

/// Noise variance giving the target average SNR for unit signal and channel power.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Per-RE serving-link responses of one block plus the noise variance.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub n_symbols: usize,
    pub n_subcarriers: usize,
    /// Symbol-major per-RE responses.
    pub h: Vec<Complex64>,
    pub sigma_w2: f64,
}

impl ChannelRealization {
    pub fn at(&self, symbol: usize, k: usize) -> Complex64 {
        self.h[symbol * self.n_subcarriers + k]
    }
}

/// Evaluates a fading process on the grid of successive blocks, caching
/// the per-tap subcarrier phasors.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    fading: FadingProcess,
    geom: OfdmGeometry,
    /// `phasors[l * n_sc + k] = exp(-j2π f_k τ_l)`.
    phasors: Vec<Complex64>,
    pub sigma_w2: f64,
}

impl ChannelSampler {
    pub fn new(fading: FadingProcess, geom: &OfdmGeometry, snr_db: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::Config("SNR must be finite".into()));
        }
        let n_sc = geom.n_subcarriers();
        let phasors = fading
            .taps
            .iter()
            .flat_map(|tap| (0..n_sc).map(move |k| (tap.delay, k)))
            .map(|(d, k)| Complex64::from_polar(1.0, -TAU * geom.subcarrier_freq(k) * d))
            .collect();
        Ok(ChannelSampler { fading, geom: geom.clone(), phasors, sigma_w2: noise_variance(snr_db) })
    }

    /// Responses of block `block`, each symbol sampled at its useful-part centre.
    pub fn realize(&self, block: u64) -> ChannelRealization {
        let g = &self.geom;
        let n_sc = g.n_subcarriers();
        let mut h = vec![Complex64::new(0.0, 0.0); g.n_res()];
        let t_block = block as f64 * g.block_duration();
        for n in 0..g.n_symbols {
            let t = t_block + g.symbol_centre(n);
            let row = &mut h[n * n_sc..(n + 1) * n_sc];
            for l in 0..self.fading.n_taps() {
                let a = self.fading.tap_gain(l, t);
                let ph = &self.phasors[l * n_sc..(l + 1) * n_sc];
                for (v, p) in row.iter_mut().zip(ph) {
                    *v += a * p;
                }
            }
        }
        ChannelRealization { n_symbols: g.n_symbols, n_subcarriers: n_sc, h, sigma_w2: self.sigma_w2 }
    }
}

/// Fading model of the radar-to-UE link, applied per pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadarLink {
    /// Unit gain; the pulse's own carrier phase supplies the randomness.
    Static,
    /// Independent CN(0, 1) gain per pulse.
    Rayleigh,
}

pub fn radar_link_gains(link: RadarLink, n_pulses: usize, seed: u64) -> Vec<Complex64> {
    match link {
        RadarLink::Static => vec![Complex64::new(1.0, 0.0); n_pulses],
        RadarLink::Rayleigh => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = std::f64::consts::FRAC_1_SQRT_2;
            (0..n_pulses)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re * s, im * s)
                })
                .collect()
        }
    }
}

/// Circularly-symmetric complex Gaussian sample with variance `var`.
pub fn cn<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}
