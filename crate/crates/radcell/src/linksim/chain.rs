//! Per-block physical layer shared by every scheme of a scenario.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{cn, epa_fading, radar_link_gains, ChannelSampler, RadarLink};
use crate::constellation::{Constellation, Modulation};
use crate::error::{Error, Result};
use crate::phy::{
    estimate_channel, estimate_noise, siso_expected_sinr, siso_mmse_gain, siso_pilot_sinr, EstimationMode,
    McsTable, OfdmGeometry, ResourceGrid, Role,
};
use crate::radar::{InterferenceMapper, PulseTrain, RadarConfig};

/// Random streams split off the scenario seed.
pub(crate) mod stream {
    pub const FADING: u64 = 1;
    pub const RADAR: u64 = 2;
    pub const PILOTS: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const CRC: u64 = 5;
    pub const DATA: u64 = 6;
}

/// A ChaCha generator on stream `(tag, index)` of `seed`.
pub fn rng_for(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream((tag << 48) ^ index);
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadarSetup {
    /// Interference-to-noise ratio of a pulse contained in one symbol, dB.
    pub inr_db: f64,
    pub radar: RadarConfig,
    pub link: RadarLink,
    /// Leading edge of the first pulse; drawn uniformly over one
    /// repetition interval when absent.
    pub t0: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub n_rb: usize,
    pub snr_db: f64,
    pub doppler_hz: f64,
    pub estimation: EstimationMode,
    pub radar: Option<RadarSetup>,
    /// Number of blocks the radar train must cover.
    pub horizon_blocks: u64,
    /// Margin taken off the effective SINR before it is quantized, dB.
    pub cqi_backoff_db: f64,
    pub seed: u64,
}

/// Everything the simulator knows about one block before data is chosen.
#[derive(Debug, Clone)]
pub struct PhyBlock {
    pub block: u64,
    pub h: Vec<Complex64>,
    pub interference: Vec<Complex64>,
    pub noise: Vec<Complex64>,
    pub h_est: Vec<Complex64>,
    pub sigma_hat2: f64,
    pub pilot_sinr: Vec<f64>,
    /// Noise-averaged post-equalizer SINR per RE (data REs only are meaningful).
    pub truth: Vec<f64>,
    /// EESM of the true data-RE SINRs with each modulation's β.
    pub truth_eesm: [f64; 3],
    pub pilot_cqi: u8,
    pub radar_hit: bool,
    /// Symbol with the most interference energy.
    pub dominant_symbol: Option<usize>,
    /// Uniform draw deciding CRC outcomes in this block.
    pub u_crc: f64,
}

#[derive(Debug)]
pub struct PhyChain {
    pub geom: OfdmGeometry,
    pub template: ResourceGrid,
    pub table: McsTable,
    cfg: ChainConfig,
    sampler: ChannelSampler,
    radar: Option<(InterferenceMapper, PulseTrain, Vec<Complex64>)>,
    constellations: [Constellation; 3],
}

impl PhyChain {
    pub fn new(cfg: ChainConfig, table: McsTable) -> Result<Self> {
        let geom = OfdmGeometry::lte(cfg.n_rb)?;
        let mut template = ResourceGrid::empty(&geom, Modulation::Qpsk)?;
        let qpsk = Modulation::Qpsk.constellation();
        template.fill(&qpsk, &mut rng_for(cfg.seed, stream::PILOTS, 0));
        let fading = epa_fading(cfg.doppler_hz, rng_for(cfg.seed, stream::FADING, 0).random())?;
        let sampler = ChannelSampler::new(fading, &geom, cfg.snr_db)?;
        let radar = match &cfg.radar {
            None => None,
            Some(setup) => {
                if !setup.inr_db.is_finite() {
                    return Err(Error::Config("INR must be finite; omit the radar to disable it".into()));
                }
                let mut rng = rng_for(cfg.seed, stream::RADAR, 0);
                let t0 = match setup.t0 {
                    Some(t) => t,
                    None => rng.random::<f64>() * setup.radar.t_rep,
                };
                let unit = RadarConfig { t0, ..setup.radar.clone() };
                let p_rad = InterferenceMapper::new(&geom, &unit)?
                    .calibrate_p_rad(10f64.powf(setup.inr_db / 10.0) * sampler.sigma_w2);
                let rc = RadarConfig { p_rad, ..unit };
                let mapper = InterferenceMapper::new(&geom, &rc)?;
                let horizon = (cfg.horizon_blocks + 1) as f64 * geom.block_duration();
                let train = PulseTrain::new(&rc, horizon, rng.random())?;
                let gains = radar_link_gains(setup.link, train.len(), rng.random());
                Some((mapper, train, gains))
            }
        };
        let constellations = Modulation::ALL.map(|m| m.constellation());
        Ok(PhyChain { geom, template, table, cfg, sampler, radar, constellations })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.cfg
    }

    pub fn sigma_w2(&self) -> f64 {
        self.sampler.sigma_w2
    }

    pub fn constellation(&self, m: Modulation) -> &Constellation {
        &self.constellations[m.index()]
    }

    /// Epoch of the radar train, if any.
    pub fn radar_t0(&self) -> Option<f64> {
        self.radar.as_ref().map(|(m, _, _)| m.config().t0)
    }

    pub fn n_data(&self) -> usize {
        self.template.roles().iter().filter(|r| **r == Role::Data).count()
    }

    pub fn block(&self, b: u64) -> Result<PhyBlock> {
        let n = self.geom.n_res();
        let nk = self.geom.n_subcarriers();
        let real = self.sampler.realize(b);
        let s2 = self.sampler.sigma_w2;

        let mut interference = vec![Complex64::new(0.0, 0.0); n];
        let (mut radar_hit, mut dominant_symbol) = (false, None);
        if let Some((mapper, train, gains)) = &self.radar {
            let hit = mapper.re_interference_map(train, b, gains)?;
            radar_hit = !hit.is_clean();
            dominant_symbol = hit.dominant_symbol(self.geom.n_symbols);
            for h in &hit.hits {
                for (k, c) in h.coeffs.iter().enumerate() {
                    interference[h.symbol * nk + k] += c;
                }
            }
        }
        let mut rng = rng_for(self.cfg.seed, stream::NOISE, b);
        let noise: Vec<Complex64> = (0..n).map(|_| cn(&mut rng, s2)).collect();
        let u_crc = rng_for(self.cfg.seed, stream::CRC, b).random::<f64>();

        // Only pilot observations feed estimation.
        let grid = &self.template;
        let mut received = vec![Complex64::new(0.0, 0.0); n];
        for (i, r) in grid.roles().iter().enumerate() {
            if *r == Role::Pilot {
                received[i] = real.h[i] * grid.symbols()[i] + interference[i] + noise[i];
            }
        }
        let h_est = estimate_channel(grid, &received, &real, self.cfg.estimation)?;
        let sigma_hat2 = estimate_noise(grid, &received, &h_est, self.cfg.estimation)?;
        let pilot_sinr: Vec<f64> = h_est.iter().map(|&h| siso_pilot_sinr(h, sigma_hat2)).collect();
        let truth: Vec<f64> = (0..n)
            .map(|i| {
                let g = siso_mmse_gain(h_est[i], sigma_hat2);
                siso_expected_sinr(g, real.h[i], interference[i].norm_sqr(), s2)
            })
            .collect();
        let truth_data = data_only(grid, &truth);
        let truth_eesm = self.table.eesm_all(&truth_data)?;
        let pilot_cqi = self.cqi(&data_only(grid, &pilot_sinr))?;
        Ok(PhyBlock {
            block: b,
            h: real.h,
            interference,
            noise,
            h_est,
            sigma_hat2,
            pilot_sinr,
            truth,
            truth_eesm,
            pilot_cqi,
            radar_hit,
            dominant_symbol,
            u_crc,
        })
    }

    /// CQI for the data-RE SINRs of a block, after the configured back-off.
    pub fn cqi(&self, data_sinrs: &[f64]) -> Result<u8> {
        let k = 10f64.powf(-self.cfg.cqi_backoff_db / 10.0);
        Ok(self.table.cqi_from_eesm(&self.table.eesm_all(data_sinrs)?.map(|e| e * k)))
    }

    /// Sends random data of `modulation` through the block; returns the
    /// transmitted grid and the bias-free equalized symbols `z / ĥ`.
    pub fn transmit(&self, pb: &PhyBlock, modulation: Modulation, data_tag: u64) -> (ResourceGrid, Vec<Complex64>) {
        let mut grid = self.template.clone();
        let mut rng = rng_for(self.cfg.seed, stream::DATA + data_tag, pb.block);
        grid.fill_data(modulation, self.constellation(modulation), &mut rng);
        let y = grid
            .symbols()
            .iter()
            .enumerate()
            .map(|(i, &x)| (pb.h[i] * x + pb.interference[i] + pb.noise[i]) / pb.h_est[i])
            .collect();
        (grid, y)
    }
}

pub fn data_only(grid: &ResourceGrid, v: &[f64]) -> Vec<f64> {
    grid.roles().iter().zip(v).filter(|(r, _)| **r == Role::Data).map(|(_, x)| *x).collect()
}
