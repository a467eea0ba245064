//! CQI/MCS tables, wideband SINR mappings and the BLER abstraction.

use rand::Rng;
use serde::Deserialize;

use super::{db, from_db};
use crate::constellation::Modulation;
use crate::error::{Error, Result};

const DEFAULT_TABLE: &str = include_str!("../../config/mcs_table.toml");

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WidebandMap {
    Eesm { beta: f64 },
    Average,
}

/// Collapses per-RE linear SINRs into one linear value.
pub fn wideband_map(sinrs: &[f64], mode: WidebandMap) -> Result<f64> {
    if sinrs.is_empty() {
        return Err(Error::Input("wideband mapping needs at least one SINR".into()));
    }
    let n = sinrs.len() as f64;
    Ok(match mode {
        WidebandMap::Average => sinrs.iter().sum::<f64>() / n,
        WidebandMap::Eesm { beta } => {
            let m = sinrs.iter().map(|g| (-g / beta).exp()).sum::<f64>() / n;
            eesm_from_mean(m, beta)
        }
    })
}

/// Inverts the EESM exponential average `mean(exp(-γ/β))`.
pub fn eesm_from_mean(mean_exp: f64, beta: f64) -> f64 {
    // Underflow means every RE sits far above β; report a value beyond any table.
    if mean_exp <= 0.0 {
        return from_db(super::SINR_CEILING_DB);
    }
    -beta * mean_exp.ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct McsEntry {
    pub index: usize,
    pub modulation: Modulation,
    /// Information bits per resource element.
    pub efficiency: f64,
    pub gamma50_db: f64,
    pub slope: f64,
    /// SINR at which the BLER equals the table target.
    pub threshold_db: f64,
}

/// BLER of a transport block at linear SINR `gamma`.
pub fn bler_model(gamma: f64, mcs: &McsEntry) -> f64 {
    if gamma <= 0.0 {
        return 1.0;
    }
    let x = mcs.slope * (db(gamma) - mcs.gamma50_db);
    if x > 700.0 {
        0.0
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// CRC check against a uniform draw `u`: the block decodes when `u >= bler`.
pub fn crc_pass(bler: f64, u: f64) -> bool {
    u >= bler
}

pub fn crc_outcome<R: Rng + ?Sized>(bler: f64, rng: &mut R) -> bool {
    crc_pass(bler, rng.random::<f64>())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    schema_version: u32,
    target_bler: f64,
    bler_slope_per_db: f64,
    eesm_beta: BetaFile,
    level: Vec<LevelFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BetaFile {
    qpsk: f64,
    #[serde(rename = "16qam")]
    qam16: f64,
    #[serde(rename = "64qam")]
    qam64: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelFile {
    modulation: String,
    efficiency: f64,
    threshold_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    pub entries: Vec<McsEntry>,
    pub target_bler: f64,
    /// EESM β per modulation, indexed by [`Modulation::index`].
    pub beta: [f64; 3],
}

impl McsTable {
    /// The table shipped with the crate.
    pub fn default_table() -> Self {
        Self::from_toml(DEFAULT_TABLE).expect("shipped MCS table is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let f: TableFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if f.schema_version != 1 {
            return Err(Error::Config(format!("unsupported MCS table schema {}", f.schema_version)));
        }
        if !(f.target_bler > 0.0 && f.target_bler < 1.0) || !(f.bler_slope_per_db > 0.0) {
            return Err(Error::Config("target BLER must be in (0,1) and slope positive".into()));
        }
        let offset = ((1.0 - f.target_bler) / f.target_bler).ln() / f.bler_slope_per_db;
        let entries = f
            .level
            .iter()
            .enumerate()
            .map(|(i, l)| {
                Ok(McsEntry {
                    index: i,
                    modulation: Modulation::parse(&l.modulation)?,
                    efficiency: l.efficiency,
                    gamma50_db: l.threshold_db - offset,
                    slope: f.bler_slope_per_db,
                    threshold_db: l.threshold_db,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let t = McsTable {
            entries,
            target_bler: f.target_bler,
            beta: [f.eesm_beta.qpsk, f.eesm_beta.qam16, f.eesm_beta.qam64],
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() || self.entries.len() > 15 {
            return Err(Error::Config(format!("need 1 to 15 CQI levels, got {}", self.entries.len())));
        }
        for w in self.entries.windows(2) {
            if !(w[1].efficiency > w[0].efficiency)
                || !(w[1].gamma50_db > w[0].gamma50_db)
                || !(w[1].threshold_db >= w[0].threshold_db)
            {
                return Err(Error::Config(format!("MCS table is not monotone at level {}", w[1].index + 1)));
            }
        }
        if self.beta.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::Config("EESM β must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, index: usize) -> &McsEntry {
        &self.entries[index]
    }

    pub fn beta_for(&self, m: Modulation) -> f64 {
        self.beta[m.index()]
    }

    pub fn max_cqi(&self) -> u8 {
        self.entries.len() as u8
    }

    /// Highest CQI whose threshold does not exceed `gamma` (linear); 0 when none.
    pub fn cqi_from_sinr(&self, gamma: f64) -> u8 {
        let g = db(gamma);
        self.entries.iter().take_while(|e| e.threshold_db <= g).count() as u8
    }

    /// CQI from per-modulation EESM values: level `q` qualifies when its
    /// threshold is met by the EESM taken with its own modulation's β.
    pub fn cqi_from_eesm(&self, eesm_by_modulation: &[f64; 3]) -> u8 {
        self.entries
            .iter()
            .filter(|e| e.threshold_db <= db(eesm_by_modulation[e.modulation.index()]))
            .map(|e| e.index as u8 + 1)
            .max()
            .unwrap_or(0)
    }

    /// CQI for a set of per-RE SINRs.
    pub fn cqi_from_grid(&self, sinrs: &[f64]) -> Result<u8> {
        Ok(self.cqi_from_eesm(&self.eesm_all(sinrs)?))
    }

    /// EESM of the per-RE SINRs for each modulation's β.
    pub fn eesm_all(&self, sinrs: &[f64]) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for (o, &beta) in out.iter_mut().zip(&self.beta) {
            *o = wideband_map(sinrs, WidebandMap::Eesm { beta })?;
        }
        Ok(out)
    }

    /// MCS used when a CQI is reported: level `cqi`, or the lowest MCS for 0.
    pub fn mcs_for_cqi(&self, cqi: u8) -> usize {
        (cqi.max(1) as usize - 1).min(self.entries.len() - 1)
    }

    /// Highest-efficiency MCS with modelled BLER at most `target`; lowest if none.
    pub fn select_mcs(&self, gamma: f64, target: f64) -> usize {
        self.entries.iter().rev().find(|e| bler_model(gamma, e) <= target).map_or(0, |e| e.index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eesm_examples() {
        for mode in [WidebandMap::Average, WidebandMap::Eesm { beta: 3.0 }] {
            let v = wideband_map(&[2.5; 7], mode).unwrap();
            assert!((v - 2.5).abs() < 1e-12);
        }
        let v = wideband_map(&[10.0, 0.1], WidebandMap::Eesm { beta: 1.0 }).unwrap();
        assert!((v - 0.793_097_007).abs() < 1e-8, "{v}");
        assert!(wideband_map(&[], WidebandMap::Average).is_err());
    }

    #[test]
    fn shipped_table_levels() {
        let t = McsTable::default_table();
        assert_eq!(t.len(), 15);
        assert_eq!(t.beta, [1.6, 4.0, 7.0]);
        assert_eq!(t.entry(0).modulation, Modulation::Qpsk);
        assert_eq!(t.entry(8).modulation, Modulation::Qam16);
        assert_eq!(t.entry(14).modulation, Modulation::Qam64);
        for e in &t.entries {
            let b = bler_model(from_db(e.threshold_db), e);
            assert!((b - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn cqi_lookup() {
        let t = McsTable::default_table();
        assert_eq!(t.cqi_from_sinr(from_db(-10.0)), 0);
        assert_eq!(t.cqi_from_sinr(from_db(30.0)), 15);
        assert_eq!(t.cqi_from_sinr(from_db(10.5)), 9);
        assert_eq!(t.cqi_from_sinr(0.0), 0);
        assert_eq!(t.cqi_from_grid(&[from_db(10.5); 10]).unwrap(), 9);
    }

    #[test]
    fn mcs_selection_limits() {
        let t = McsTable::default_table();
        assert_eq!(t.select_mcs(0.0, 0.1), 0);
        assert_eq!(t.select_mcs(from_db(60.0), 0.1), 14);
        assert_eq!(t.select_mcs(from_db(10.5), 0.1), 8);
        assert_eq!(t.mcs_for_cqi(0), 0);
        assert_eq!(t.mcs_for_cqi(9), 8);
    }

    #[test]
    fn bler_curve_shape() {
        let t = McsTable::default_table();
        let e = t.entry(6);
        assert!((bler_model(from_db(e.gamma50_db), e) - 0.5).abs() < 1e-12);
        assert_eq!(bler_model(0.0, e), 1.0);
        assert!(bler_model(from_db(300.0), e) < 1e-100);
    }

    #[test]
    fn crc_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!((0..1000).all(|_| crc_outcome(0.0, &mut rng)));
        assert!((0..1000).all(|_| !crc_outcome(1.0, &mut rng)));
        let n = 10_000;
        let p = 0.23;
        let fails = (0..n).filter(|_| !crc_outcome(p, &mut rng)).count() as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((fails - n as f64 * p).abs() <= 3.0 * sd);
    }

    #[test]
    fn rejects_non_monotone_table() {
        let text = DEFAULT_TABLE.replace("threshold_db = 8.1", "threshold_db = 4.0");
        assert!(McsTable::from_toml(&text).is_err());
        let text = DEFAULT_TABLE.replace("qpsk = 1.6", "qpsk = 1.6\nbpsk = 1.0");
        assert!(matches!(McsTable::from_toml(&text), Err(Error::Parse(_))));
    }

    proptest! {
        #[test]
        fn eesm_never_exceeds_average(v in proptest::collection::vec(0.0..200.0f64, 1..40), beta in 0.5..10.0f64) {
            let e = wideband_map(&v, WidebandMap::Eesm { beta }).unwrap();
            let a = wideband_map(&v, WidebandMap::Average).unwrap();
            prop_assert!(e <= a * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn average_ignores_order(mut v in proptest::collection::vec(0.0..200.0f64, 1..40)) {
            let a = wideband_map(&v, WidebandMap::Average).unwrap();
            v.reverse();
            let b = wideband_map(&v, WidebandMap::Average).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn selection_and_bler_are_monotone(g1 in -20.0..40.0f64, dg in 0.0..10.0f64, m in 0usize..15) {
            let t = McsTable::default_table();
            let (a, b) = (from_db(g1), from_db(g1 + dg));
            prop_assert!(t.select_mcs(a, 0.1) <= t.select_mcs(b, 0.1));
            prop_assert!(t.cqi_from_sinr(a) <= t.cqi_from_sinr(b));
            prop_assert!(bler_model(b, t.entry(m)) <= bler_model(a, t.entry(m)));
        }
    }
}
