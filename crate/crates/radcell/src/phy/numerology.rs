//! LTE-style OFDM timing with normal cyclic prefix.

use crate::error::{Error, Result};

pub const SUBCARRIERS_PER_RB: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmGeometry {
    pub n_rb: usize,
    pub n_fft: usize,
    pub n_symbols: usize,
    /// Subcarrier spacing in Hz.
    pub scs: f64,
    /// Subcarriers per coherence block.
    pub k_rb: usize,
    cp: Vec<usize>,
    starts: Vec<usize>,
}

impl OfdmGeometry {
    /// Normal-CP LTE numerology: 14 symbols per 1 ms block at 15 kHz.
    pub fn lte(n_rb: usize) -> Result<Self> {
        if n_rb == 0 {
            return Err(Error::Config("need at least one resource block".into()));
        }
        let n_sc = n_rb * SUBCARRIERS_PER_RB;
        let n_fft = ((n_sc as f64 / 0.6).ceil() as usize).next_power_of_two().max(128);
        Self::new(n_rb, n_fft, 14, 15e3, SUBCARRIERS_PER_RB)
    }

    pub fn new(n_rb: usize, n_fft: usize, n_symbols: usize, scs: f64, k_rb: usize) -> Result<Self> {
        let n_sc = n_rb * SUBCARRIERS_PER_RB;
        if n_sc + 1 > n_fft {
            return Err(Error::Config(format!("{n_sc} subcarriers plus DC do not fit a {n_fft}-point DFT")));
        }
        if n_fft % 128 != 0 {
            return Err(Error::Config(format!("DFT size {n_fft} is not a multiple of 128")));
        }
        if n_symbols == 0 || n_symbols % 7 != 0 {
            return Err(Error::Config(format!("block must hold whole 7-symbol slots, got {n_symbols}")));
        }
        if k_rb == 0 || n_sc % k_rb != 0 {
            return Err(Error::Config(format!("coherence block {k_rb} does not tile {n_sc} subcarriers")));
        }
        if !(scs > 0.0) {
            return Err(Error::Config("subcarrier spacing must be positive".into()));
        }
        let long = 160 * n_fft / 2048;
        let short = 144 * n_fft / 2048;
        let cp: Vec<usize> = (0..n_symbols).map(|n| if n % 7 == 0 { long } else { short }).collect();
        let mut starts = Vec::with_capacity(n_symbols);
        let mut t = 0;
        for &c in &cp {
            starts.push(t);
            t += c + n_fft;
        }
        Ok(OfdmGeometry { n_rb, n_fft, n_symbols, scs, k_rb, cp, starts })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_rb * SUBCARRIERS_PER_RB
    }

    pub fn n_res(&self) -> usize {
        self.n_symbols * self.n_subcarriers()
    }

    pub fn coherence_blocks(&self) -> usize {
        self.n_subcarriers() / self.k_rb
    }

    pub fn sample_rate(&self) -> f64 {
        self.scs * self.n_fft as f64
    }

    pub fn cp_samples(&self, symbol: usize) -> usize {
        self.cp[symbol]
    }

    pub fn samples_per_block(&self) -> usize {
        self.starts[self.n_symbols - 1] + self.cp[self.n_symbols - 1] + self.n_fft
    }

    /// Block duration in seconds.
    pub fn block_duration(&self) -> f64 {
        self.samples_per_block() as f64 / self.sample_rate()
    }

    /// Offset of the symbol's first useful (post-CP) sample from the block start, in samples.
    pub fn useful_start_sample(&self, symbol: usize) -> usize {
        self.starts[symbol] + self.cp[symbol]
    }

    /// Offset of the symbol's CP start from the block start, in seconds.
    pub fn symbol_start(&self, symbol: usize) -> f64 {
        self.starts[symbol] as f64 / self.sample_rate()
    }

    pub fn useful_start(&self, symbol: usize) -> f64 {
        self.useful_start_sample(symbol) as f64 / self.sample_rate()
    }

    pub fn useful_duration(&self) -> f64 {
        self.n_fft as f64 / self.sample_rate()
    }

    /// Centre time of the symbol's useful part relative to the block start.
    pub fn symbol_centre(&self, symbol: usize) -> f64 {
        self.useful_start(symbol) + 0.5 * self.useful_duration()
    }

    /// Signed DFT bin of used subcarrier `k`; DC is left empty.
    pub fn signed_bin(&self, k: usize) -> i64 {
        let half = (self.n_subcarriers() / 2) as i64;
        let k = k as i64;
        if k < half {
            k - half
        } else {
            k - half + 1
        }
    }

    /// Index into a length-`n_fft` DFT output for used subcarrier `k`.
    pub fn dft_index(&self, k: usize) -> usize {
        self.signed_bin(k).rem_euclid(self.n_fft as i64) as usize
    }

    /// Baseband frequency of used subcarrier `k` in Hz.
    pub fn subcarrier_freq(&self, k: usize) -> f64 {
        self.signed_bin(k) as f64 * self.scs
    }
}
