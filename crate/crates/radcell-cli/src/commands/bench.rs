//! Detection-chain statistics: PRI lock, pilot contamination, contaminated
//! symbol detection and hybrid SINR quality.

use rayon::prelude::*;

use radcell::constellation::Modulation;
use radcell::detector::{detect_contaminated_symbol, BlockObservation, Detection, DetectorConfig, HybridEstimator};
use radcell::linksim::{data_only, ChainConfig, PhyBlock, PhyChain, RadarSetup};
use radcell::phy::grid::is_pilot_symbol;
use radcell::phy::{db, from_db, wideband_map, McsTable, OfdmGeometry, WidebandMap};

use crate::config::{BenchSection, FileConfig};
use crate::output::{f, opt, s, Check, Table};
use crate::{CliError, Outcome};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchPoint {
    pub snr_db: f64,
    /// `None` switches the radar off.
    pub inr_db: Option<f64>,
}

/// Counters for one bench point.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchStats {
    pub point: BenchPoint,
    pub modulation: Modulation,
    /// Repetition rate the tracker holds at the end of the run.
    pub f_rep: Option<f64>,
    pub blocks: u64,
    /// Blocks whose dominant pulse sits on a non-pilot symbol.
    pub trials: usize,
    pub correct: usize,
    /// Blocks the radar touched.
    pub impaired: usize,
    pub hybrid_within: usize,
    pub hybrid_over: usize,
    pub hybrid_under: usize,
    pub pilot_over: usize,
    /// Predicted blocks and how many of them got the pilot-contamination call right.
    pub contamination_calls: usize,
    pub contamination_correct: usize,
}

impl BenchStats {
    pub fn accuracy(&self) -> f64 {
        ratio(self.correct, self.trials)
    }

    pub fn within_frac(&self) -> f64 {
        ratio(self.hybrid_within, self.impaired)
    }

    pub fn hybrid_over_frac(&self) -> f64 {
        ratio(self.hybrid_over, self.impaired)
    }

    pub fn hybrid_under_frac(&self) -> f64 {
        ratio(self.hybrid_under, self.impaired)
    }

    pub fn pilot_over_frac(&self) -> f64 {
        ratio(self.pilot_over, self.impaired)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        f64::NAN
    } else {
        a as f64 / b as f64
    }
}

/// One block of the detection log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub block: u64,
    pub predicted: bool,
    pub pilot_impaired: bool,
    pub detected: Vec<usize>,
    pub true_symbol: Option<usize>,
    pub hybrid_db: f64,
    pub true_db: f64,
    pub pilot_db: f64,
}

/// Modulation the link would run at this SNR.
pub fn modulation_for(table: &McsTable, snr_db: f64, backoff_db: f64) -> Modulation {
    let cqi = table.cqi_from_sinr(from_db(snr_db - backoff_db));
    table.entry(table.mcs_for_cqi(cqi)).modulation
}

pub fn run_point(
    sec: &BenchSection,
    cfg: &FileConfig,
    point: BenchPoint,
    seed: u64,
) -> Result<(BenchStats, Vec<LogRow>), CliError> {
    sec.check()?;
    let link = sec.link();
    let radar = match point.inr_db {
        None => None,
        Some(inr_db) => Some(RadarSetup {
            inr_db,
            radar: cfg.radar.radar()?,
            link: cfg.radar.link()?,
            t0: cfg.radar.t0(),
        }),
    };
    let warmup = sec.warmup_blocks;
    let chain = PhyChain::new(
        ChainConfig {
            n_rb: sec.n_rb,
            snr_db: point.snr_db,
            doppler_hz: sec.doppler_hz,
            estimation: link.estimation()?,
            radar,
            horizon_blocks: warmup + sec.max_blocks,
            cqi_backoff_db: sec.cqi_backoff_db,
            seed,
        },
        McsTable::default_table(),
    )?;
    let modulation = modulation_for(&chain.table, point.snr_db, sec.cqi_backoff_db);
    let c = chain.constellation(modulation);
    let tb = OfdmGeometry::lte(sec.n_rb)?.block_duration();
    let mut dcfg = DetectorConfig::new(tb);
    dcfg.tracker.window = sec.pri_window_blocks;
    let mut det = HybridEstimator::new(dcfg)?;

    let mut st = BenchStats {
        point,
        modulation,
        f_rep: None,
        blocks: 0,
        trials: 0,
        correct: 0,
        impaired: 0,
        hybrid_within: 0,
        hybrid_over: 0,
        hybrid_under: 0,
        pilot_over: 0,
        contamination_calls: 0,
        contamination_correct: 0,
    };
    let mut log = Vec::new();
    let capture_floor = point.inr_db.map_or(f64::INFINITY, |inr| sec.min_capture * from_db(inr) * chain.sigma_w2());
    let nk = chain.geom.n_subcarriers();
    let captured = |pb: &PhyBlock, s: usize| {
        pb.interference[s * nk..(s + 1) * nk].iter().map(|v| v.norm_sqr()).sum::<f64>() / nk as f64
    };
    // With the radar off there is nothing to count; a short run shows the tracker stays unlocked.
    let end = if point.inr_db.is_some() { warmup + sec.max_blocks } else { warmup + sec.trials as u64 };
    for b in 0..end {
        if point.inr_db.is_some() && b >= warmup && st.trials >= sec.trials && st.impaired >= sec.trials {
            break;
        }
        let pb = chain.block(b)?;
        let (grid, y) = chain.transmit(&pb, modulation, 0);
        let report = det.process(&BlockObservation {
            grid: &grid,
            constellation: c,
            h_est: &pb.h_est,
            y: &y,
            pilot_sinr: &pb.pilot_sinr,
        })?;
        if b < warmup {
            continue;
        }
        st.blocks += 1;
        let predicted = report.predicted_pulses > 0;
        let true_pilot = pb.dominant_symbol.is_some_and(is_pilot_symbol);
        if predicted && pb.radar_hit {
            st.contamination_calls += 1;
            st.contamination_correct += usize::from((report.detection == Detection::PilotImpaired) == true_pilot);
        }
        if let Some(sym) = pb.dominant_symbol.filter(|&s| !is_pilot_symbol(s) && captured(&pb, s) >= capture_floor) {
            let found = detect_contaminated_symbol(&y, &pb.pilot_sinr, &grid, c, &grid.non_pilot_symbols(), 1)?;
            st.trials += 1;
            st.correct += usize::from(found.first() == Some(&sym));
        }
        if !(pb.radar_hit || predicted) {
            continue;
        }
        let true_db = db(wideband_map(&data_only(&grid, &pb.truth), WidebandMap::Average)?);
        let hybrid_db = db(wideband_map(&report.sinr.data_values(), WidebandMap::Average)?);
        if pb.radar_hit {
            st.impaired += 1;
            st.hybrid_within += usize::from((hybrid_db - true_db).abs() <= sec.within_db);
            st.hybrid_over += usize::from(hybrid_db > true_db);
            st.hybrid_under += usize::from(hybrid_db < true_db);
            st.pilot_over += usize::from(report.pilot_avg_db > true_db);
        }
        if sec.log {
            log.push(LogRow {
                block: b,
                predicted,
                pilot_impaired: report.detection == Detection::PilotImpaired,
                detected: match &report.detection {
                    Detection::NonPilotImpaired { symbols } => symbols.clone(),
                    _ => Vec::new(),
                },
                true_symbol: pb.dominant_symbol,
                hybrid_db,
                true_db,
                pilot_db: report.pilot_avg_db,
            });
        }
    }
    st.f_rep = det.tracker().lock().map(|l| l.estimate.f_rep);
    Ok((st, log))
}

pub fn points(sec: &BenchSection) -> Vec<BenchPoint> {
    let mut out = Vec::new();
    for &snr_db in &sec.snr_db {
        if sec.radar_enabled {
            out.extend(sec.inr_db.iter().map(|&v| BenchPoint { snr_db, inr_db: Some(v) }));
        } else {
            out.push(BenchPoint { snr_db, inr_db: None });
        }
    }
    out
}

/// Binomial standard error of a fraction.
fn se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n.max(1) as f64).sqrt()
}

pub fn bench_checks(sec: &BenchSection, f_true: f64, stats: &[BenchStats]) -> Vec<Check> {
    let mut out = Vec::new();
    for st in stats {
        let p = st.point;
        let scope = format!("snr={} inr={}", p.snr_db, p.inr_db.map_or_else(|| "off".into(), |v| v.to_string()));
        match p.inr_db {
            None => out.push(Check::new("pri_absent", scope.clone(), st.f_rep.is_none(), format!("{:?}", st.f_rep))),
            Some(_) => out.push(Check::new(
                "pri_locked",
                scope.clone(),
                st.f_rep.is_some_and(|v| (v - f_true).abs() <= sec.pri_tolerance_hz),
                format!("{:?} vs {f_true}", st.f_rep),
            )),
        }
        if p.inr_db.is_none() {
            continue;
        }
        if p.snr_db >= sec.check_min_snr_db {
            out.push(Check::new(
                "symbol_detection_accuracy",
                scope.clone(),
                st.accuracy() >= sec.accuracy_min,
                format!("{:.4} over {} trials", st.accuracy(), st.trials),
            ));
            out.push(Check::new(
                "pilot_overestimates_more",
                scope.clone(),
                st.pilot_over_frac() > st.hybrid_over_frac(),
                format!("pilot {:.4} hybrid {:.4}", st.pilot_over_frac(), st.hybrid_over_frac()),
            ));
        } else if p.inr_db.is_some_and(|inr| inr <= p.snr_db) {
            out.push(Check::new(
                "hybrid_underestimates_at_high_sir",
                scope.clone(),
                st.hybrid_under_frac() >= sec.underestimate_min,
                format!("{:.4}", st.hybrid_under_frac()),
            ));
        }
    }
    // The ±window share is pooled over the INR sweep of each checked SNR.
    let mut snrs: Vec<f64> = stats.iter().map(|s| s.point.snr_db).filter(|&v| v >= sec.check_min_snr_db).collect();
    snrs.sort_by(f64::total_cmp);
    snrs.dedup();
    for snr in snrs {
        let pts = stats.iter().filter(|s| s.point.snr_db == snr && s.point.inr_db.is_some());
        let (within, total) = pts.fold((0, 0), |(w, n), s| (w + s.hybrid_within, n + s.impaired));
        if total == 0 {
            continue;
        }
        let frac = within as f64 / total as f64;
        out.push(Check::new(
            "hybrid_within_window",
            format!("snr={snr}"),
            frac >= sec.within_min,
            format!("{frac:.4} of {total} impaired blocks within {} dB", sec.within_db),
        ));
    }
    // Below the checked SNR, accuracy must not fall as the radar gets stronger.
    let mut low: Vec<&BenchStats> =
        stats.iter().filter(|s| s.point.snr_db < sec.check_min_snr_db && s.point.inr_db.is_some()).collect();
    low.sort_by(|a, b| a.point.snr_db.total_cmp(&b.point.snr_db).then(a.point.inr_db.unwrap().total_cmp(&b.point.inr_db.unwrap())));
    for w in low.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.point.snr_db != b.point.snr_db {
            continue;
        }
        let slack = 2.0 * (se(a.accuracy(), a.trials).powi(2) + se(b.accuracy(), b.trials).powi(2)).sqrt();
        out.push(Check::new(
            "accuracy_non_decreasing",
            format!("snr={} inr={}..{}", a.point.snr_db, a.point.inr_db.unwrap(), b.point.inr_db.unwrap()),
            b.accuracy() >= a.accuracy() - slack,
            format!("{:.4} -> {:.4} (2 SE {:.4})", a.accuracy(), b.accuracy(), slack),
        ));
    }
    out
}

pub fn detect_bench(cfg: &FileConfig, seed: u64) -> Result<Outcome, CliError> {
    let sec = &cfg.detect_bench;
    sec.check()?;
    let pts = points(sec);
    let runs = pts
        .par_iter()
        .map(|&p| run_point(sec, cfg, p, seed))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut summary = Table::new(&[
        "snr_db",
        "inr_db",
        "modulation",
        "blocks",
        "f_rep_hz",
        "trials",
        "accuracy",
        "impaired_blocks",
        "hybrid_within_frac",
        "hybrid_over_frac",
        "hybrid_under_frac",
        "pilot_over_frac",
        "contamination_calls",
        "contamination_correct",
    ]);
    let mut log = Table::new(&[
        "snr_db",
        "inr_db",
        "block",
        "predicted_impaired",
        "pilot_impaired",
        "detected_symbol",
        "true_symbol",
        "hybrid_sinr_db",
        "true_sinr_db",
        "pilot_sinr_db",
    ]);
    for (st, rows) in &runs {
        let inr = st.point.inr_db.map_or_else(|| "off".into(), s);
        summary.push(vec![
            s(st.point.snr_db),
            inr.clone(),
            st.modulation.name().into(),
            s(st.blocks),
            st.f_rep.map_or_else(|| "absent".into(), |v| f(v, 3)),
            s(st.trials),
            f(st.accuracy(), 4),
            s(st.impaired),
            f(st.within_frac(), 4),
            f(st.hybrid_over_frac(), 4),
            f(st.hybrid_under_frac(), 4),
            f(st.pilot_over_frac(), 4),
            s(st.contamination_calls),
            s(st.contamination_correct),
        ]);
        for r in rows {
            log.push(vec![
                s(st.point.snr_db),
                inr.clone(),
                s(r.block),
                s(u8::from(r.predicted)),
                s(u8::from(r.pilot_impaired)),
                r.detected.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";"),
                opt(r.true_symbol),
                f(r.hybrid_db, 4),
                f(r.true_db, 4),
                f(r.pilot_db, 4),
            ]);
        }
    }
    let stats: Vec<BenchStats> = runs.into_iter().map(|(s, _)| s).collect();
    let checks = bench_checks(sec, cfg.radar.radar()?.f_rep(), &stats);
    let mut tables = vec![("detect_summary.csv", summary)];
    if sec.log {
        tables.push(("detect_log.csv", log));
    }
    Ok(Outcome { tables, checks })
}
