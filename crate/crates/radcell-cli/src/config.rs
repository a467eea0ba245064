//! Run configuration file. Every key carries its unit in the name and
//! unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use radcell::channel::RadarLink;
use radcell::constellation::Modulation;
use radcell::detector::DetectorConfig;
use radcell::feedback::{DualStatistics, Statistic};
use radcell::linksim::{Estimator, Feedback, ScenarioConfig, Scheme};
use radcell::phy::{EstimationMode, OfdmGeometry};
use radcell::radar::{PulsePhase, RadarConfig};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub seed: u64,
    pub radar: RadarSection,
    pub validate_dist: DistSection,
    pub sweep: SweepSection,
    pub detect_bench: BenchSection,
}

impl Default for FileConfig {
    fn default() -> Self {
        FileConfig {
            seed: 1,
            radar: RadarSection::default(),
            validate_dist: DistSection::default(),
            sweep: SweepSection::default(),
            detect_bench: BenchSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarSection {
    pub t_rep_ms: f64,
    pub t_pul_us: f64,
    pub f_s_mhz: f64,
    pub delta_f_r_hz: f64,
    /// First pulse edge; drawn per run when absent.
    pub t0_ms: Option<f64>,
    /// "static" or "rayleigh".
    pub link: String,
    /// "random" or "fixed".
    pub phase: String,
}

impl Default for RadarSection {
    fn default() -> Self {
        RadarSection {
            t_rep_ms: 3.125,
            t_pul_us: 5.0,
            f_s_mhz: 5.0,
            delta_f_r_hz: 0.0,
            t0_ms: None,
            link: "static".into(),
            phase: "random".into(),
        }
    }
}

impl RadarSection {
    pub fn radar(&self) -> Result<RadarConfig, CliError> {
        let phase_mode = match self.phase.as_str() {
            "random" => PulsePhase::RandomPerPulse,
            "fixed" => PulsePhase::Fixed,
            other => return Err(CliError::Config(format!("radar.phase must be random or fixed, got {other:?}"))),
        };
        let cfg = RadarConfig {
            t_rep: self.t_rep_ms * 1e-3,
            t_pul: self.t_pul_us * 1e-6,
            f_s: self.f_s_mhz * 1e6,
            delta_f_r: self.delta_f_r_hz,
            phase_mode,
            ..RadarConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn link(&self) -> Result<RadarLink, CliError> {
        match self.link.as_str() {
            "static" => Ok(RadarLink::Static),
            "rayleigh" => Ok(RadarLink::Rayleigh),
            other => Err(CliError::Config(format!("radar.link must be static or rayleigh, got {other:?}"))),
        }
    }

    pub fn t0(&self) -> Option<f64> {
        self.t0_ms.map(|t| t * 1e-3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistSection {
    pub modulations: Vec<String>,
    pub k_rb: Vec<usize>,
    /// (P_r, σ_n²) pairs, linear.
    pub points: Vec<[f64; 2]>,
    pub mc_blocks: usize,
    pub grid_points: usize,
    pub tolerance: f64,
    /// "iid" or "square_law"; the latter uses the radar section's pulse.
    pub phase_model: String,
    /// First subcarrier offset of the block for the square-law relation.
    pub square_law_k0: usize,
}

impl Default for DistSection {
    fn default() -> Self {
        DistSection {
            modulations: vec!["16qam".into()],
            k_rb: vec![12],
            points: vec![[1e-2, 1e-3], [1e-2, 1.0], [1.0, 1e-3], [1.0, 1.0]],
            mc_blocks: 100_000,
            grid_points: 30,
            tolerance: 0.02,
            phase_model: "iid".into(),
            square_law_k0: 1,
        }
    }
}

impl DistSection {
    pub fn modulations(&self) -> Result<Vec<Modulation>, CliError> {
        if self.modulations.is_empty() {
            return Err(CliError::Config("validate_dist.modulations is empty".into()));
        }
        self.modulations.iter().map(|m| Modulation::parse(m).map_err(CliError::from)).collect()
    }

    pub fn check(&self) -> Result<(), CliError> {
        self.modulations()?;
        if self.k_rb.is_empty() || self.k_rb.contains(&0) {
            return Err(CliError::Config("validate_dist.k_rb needs positive entries".into()));
        }
        if self.points.is_empty() || self.points.iter().flatten().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(CliError::Config("validate_dist.points needs positive finite (p_r, sigma_n2) pairs".into()));
        }
        if self.mc_blocks == 0 || self.grid_points < 2 {
            return Err(CliError::Config("validate_dist needs mc_blocks >= 1 and grid_points >= 2".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(CliError::Config("validate_dist.tolerance must be >= 0".into()));
        }
        if !matches!(self.phase_model.as_str(), "iid" | "square_law") {
            return Err(CliError::Config(format!(
                "validate_dist.phase_model must be iid or square_law, got {:?}",
                self.phase_model
            )));
        }
        Ok(())
    }
}

/// Link parameters shared by the sweep and the detection bench.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSection {
    pub n_rb: usize,
    pub doppler_hz: f64,
    /// "genie" or "ls_interp".
    pub estimation: String,
    pub warmup_blocks: u64,
    pub cqi_backoff_db: f64,
}

impl LinkSection {
    pub fn estimation(&self) -> Result<EstimationMode, CliError> {
        match self.estimation.as_str() {
            "genie" => Ok(EstimationMode::Genie),
            "ls_interp" => Ok(EstimationMode::LsInterp),
            other => Err(CliError::Config(format!("estimation must be genie or ls_interp, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub snr_db: f64,
    pub inr_db: Vec<f64>,
    pub radar_enabled: bool,
    pub n_rb: usize,
    pub doppler_hz: f64,
    /// "genie" or "ls_interp".
    pub estimation: String,
    pub warmup_blocks: u64,
    pub cqi_backoff_db: f64,
    pub t_csi_blocks: usize,
    pub csi_delay_blocks: usize,
    pub harq_max_retx: u8,
    pub tau_wait_ms: f64,
    pub duration_blocks: u64,
    /// Entries like "median+pilot" or "dual+hybrid".
    pub schemes: Vec<String>,
    pub dual_fading_stat: String,
    pub dual_impaired_stat: String,
    pub reconstruction: bool,
    pub pri_window_blocks: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            snr_db: 19.5,
            inr_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
            radar_enabled: true,
            n_rb: 50,
            doppler_hz: 10.0,
            estimation: "genie".into(),
            warmup_blocks: 600,
            cqi_backoff_db: 4.0,
            t_csi_blocks: 10,
            csi_delay_blocks: 8,
            harq_max_retx: 4,
            tau_wait_ms: 8.0,
            duration_blocks: 10_000,
            schemes: Scheme::defaults().iter().map(|s| scheme_name(*s)).collect(),
            dual_fading_stat: "median".into(),
            dual_impaired_stat: "min".into(),
            reconstruction: true,
            pri_window_blocks: 500,
        }
    }
}

pub fn scheme_name(s: Scheme) -> String {
    format!("{}+{}", s.feedback.name(), s.estimator.name())
}

pub fn parse_scheme(s: &str) -> Result<Scheme, CliError> {
    let (f, e) = s
        .split_once('+')
        .ok_or_else(|| CliError::Config(format!("scheme {s:?} must look like feedback+estimator")))?;
    Ok(Scheme::new(Feedback::parse(f)?, Estimator::parse(e)?))
}

impl SweepSection {
    pub fn link(&self) -> LinkSection {
        LinkSection {
            n_rb: self.n_rb,
            doppler_hz: self.doppler_hz,
            estimation: self.estimation.clone(),
            warmup_blocks: self.warmup_blocks,
            cqi_backoff_db: self.cqi_backoff_db,
        }
    }

    /// Scenario for one INR point, `None` meaning the radar is off.
    pub fn scenario(&self, radar: &RadarSection, inr_db: Option<f64>, seed: u64) -> Result<ScenarioConfig, CliError> {
        let tb = OfdmGeometry::lte(self.n_rb)?.block_duration();
        let mut detector = DetectorConfig::new(tb);
        detector.tracker.window = self.pri_window_blocks;
        let schemes = self.schemes.iter().map(|s| parse_scheme(s)).collect::<Result<Vec<_>, _>>()?;
        let cfg = ScenarioConfig {
            snr_db: self.snr_db,
            inr_db,
            radar: radar.radar()?,
            radar_link: radar.link()?,
            t0: radar.t0(),
            n_rb: self.n_rb,
            doppler_hz: self.doppler_hz,
            estimation: self.link().estimation()?,
            t_csi: self.t_csi_blocks,
            csi_delay: self.csi_delay_blocks,
            harq_max_retx: self.harq_max_retx,
            tau_wait: self.tau_wait_ms * 1e-3,
            warmup_blocks: self.warmup_blocks,
            duration_blocks: self.duration_blocks,
            schemes,
            dual_stats: DualStatistics {
                fading: Statistic::parse(&self.dual_fading_stat)?,
                impaired: Statistic::parse(&self.dual_impaired_stat)?,
            },
            cqi_backoff_db: self.cqi_backoff_db,
            detector,
            reconstruction: self.reconstruction,
            seed,
            keep_trace: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// INR points of the sweep; a single `None` when the radar is off.
    pub fn points(&self) -> Result<Vec<Option<f64>>, CliError> {
        if !self.radar_enabled {
            return Ok(vec![None]);
        }
        if self.inr_db.is_empty() || self.inr_db.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("sweep.inr_db needs finite values; set radar_enabled = false instead".into()));
        }
        Ok(self.inr_db.iter().map(|&v| Some(v)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub snr_db: Vec<f64>,
    pub inr_db: Vec<f64>,
    pub radar_enabled: bool,
    pub n_rb: usize,
    pub doppler_hz: f64,
    /// "genie" or "ls_interp".
    pub estimation: String,
    pub warmup_blocks: u64,
    pub cqi_backoff_db: f64,
    /// Contaminated-symbol trials per point.
    pub trials: usize,
    /// A trial needs the dominant symbol to hold at least this share of a
    /// contained pulse's mean per-RE power; pulses lost in the cyclic prefix
    /// do not count.
    pub min_capture: f64,
    /// Give up on a point after this many measured blocks.
    pub max_blocks: u64,
    pub pri_window_blocks: usize,
    /// Points at or above this SNR are held to the accuracy checks.
    pub check_min_snr_db: f64,
    pub accuracy_min: f64,
    pub within_db: f64,
    pub within_min: f64,
    pub underestimate_min: f64,
    pub pri_tolerance_hz: f64,
    /// Write one log row per block that is hit or predicted.
    pub log: bool,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            snr_db: vec![-0.2, 13.8, 19.5],
            inr_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            radar_enabled: true,
            n_rb: 50,
            doppler_hz: 10.0,
            estimation: "genie".into(),
            warmup_blocks: 600,
            cqi_backoff_db: 4.0,
            trials: 1000,
            min_capture: 0.5,
            max_blocks: 20_000,
            pri_window_blocks: 500,
            check_min_snr_db: 10.0,
            accuracy_min: 0.95,
            within_db: 5.0,
            within_min: 0.8,
            underestimate_min: 0.95,
            pri_tolerance_hz: 2.0,
            log: true,
        }
    }
}

impl BenchSection {
    pub fn link(&self) -> LinkSection {
        LinkSection {
            n_rb: self.n_rb,
            doppler_hz: self.doppler_hz,
            estimation: self.estimation.clone(),
            warmup_blocks: self.warmup_blocks,
            cqi_backoff_db: self.cqi_backoff_db,
        }
    }

    pub fn check(&self) -> Result<(), CliError> {
        if self.snr_db.is_empty() || self.snr_db.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("detect_bench.snr_db needs finite values".into()));
        }
        if self.radar_enabled && (self.inr_db.is_empty() || self.inr_db.iter().any(|v| !v.is_finite())) {
            return Err(CliError::Config("detect_bench.inr_db needs finite values".into()));
        }
        if !(0.0..=1.0).contains(&self.min_capture) {
            return Err(CliError::Config("detect_bench.min_capture must lie in [0, 1]".into()));
        }
        if self.pri_window_blocks as u64 > self.warmup_blocks {
            return Err(CliError::Config("detect_bench.warmup_blocks must cover the PRI window".into()));
        }
        self.link().estimation()?;
        Ok(())
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::ReadConfig { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// SHA-256 of the resolved configuration, seed excluded.
    pub fn hash(&self) -> String {
        let canonical = FileConfig { seed: 0, ..self.clone() };
        let text = toml::to_string(&canonical).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
