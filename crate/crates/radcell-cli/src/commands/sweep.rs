//! Closed-loop link simulation over an INR sweep.

use rayon::prelude::*;

use radcell::feedback::{feedback_overhead, Statistic};
use radcell::phy::OfdmGeometry;
use radcell::linksim::{harq_latency, run_scenario, Estimator, Feedback, LinkMetrics, ScenarioResult, BLER_TARGET};

use crate::config::{scheme_name, FileConfig};
use crate::output::{f, opt, s, Check, Table};
use crate::{CliError, Outcome};

/// Bits of one CQI report.
pub const CQI_BITS: u64 = 4;

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub inr_db: Option<f64>,
    pub result: ScenarioResult,
}

pub fn run_points(cfg: &FileConfig, seed: u64) -> Result<Vec<SweepPoint>, CliError> {
    let sec = &cfg.sweep;
    let points = sec.points()?;
    let scenarios = points
        .iter()
        .map(|&inr| sec.scenario(&cfg.radar, inr, seed))
        .collect::<Result<Vec<_>, _>>()?;
    scenarios
        .par_iter()
        .zip(&points)
        .map(|(sc, &inr_db)| Ok(SweepPoint { inr_db, result: run_scenario(sc)? }))
        .collect()
}

fn inr_cell(inr: Option<f64>) -> String {
    inr.map_or_else(|| "off".into(), |v| s(v))
}

fn find(r: &ScenarioResult, feedback: Feedback, estimator: Option<Estimator>) -> Option<&LinkMetrics> {
    r.metrics
        .iter()
        .find(|m| m.scheme.feedback == feedback && estimator.is_none_or(|e| m.scheme.estimator == e))
}

/// Orderings and bounds the sweep is expected to show.
pub fn sweep_checks(points: &[SweepPoint], tau_wait: f64) -> Vec<Check> {
    let mut out = Vec::new();
    for p in points {
        let scope = format!("inr={}", inr_cell(p.inr_db));
        let r = &p.result;
        for m in &r.metrics {
            out.push(Check::new(
                "throughput_le_max_rate",
                format!("{scope} {}", scheme_name(m.scheme)),
                m.throughput_bps <= r.max_rate_bps,
                format!("{:.0} vs {:.0}", m.throughput_bps, r.max_rate_bps),
            ));
            if (0.02..=0.5).contains(&m.bler) {
                let want = harq_latency(m.bler, tau_wait).expect("bler below one") * 1e3;
                let rel = (m.mean_latency_ms - want).abs() / want;
                out.push(Check::new(
                    "harq_latency_matches",
                    format!("{scope} {}", scheme_name(m.scheme)),
                    rel <= 0.1,
                    format!("{:.4} ms vs {want:.4} ms", m.mean_latency_ms),
                ));
            }
        }
        let conventional: Vec<&LinkMetrics> = [Statistic::Min, Statistic::Median, Statistic::Max]
            .iter()
            .filter_map(|&st| find(r, Feedback::Single(st), Some(Estimator::Pilot)))
            .collect();
        if let Some(dual) = find(r, Feedback::Dual, Some(Estimator::Hybrid)) {
            if !conventional.is_empty() {
                let best = conventional.iter().map(|m| m.throughput_bps).fold(0.0, f64::max);
                out.push(Check::new(
                    "dual_throughput_dominates",
                    scope.clone(),
                    dual.throughput_bps >= best,
                    format!("{:.0} vs best conventional {best:.0}", dual.throughput_bps),
                ));
            }
            if p.inr_db.is_some_and(|v| v <= 12.0) {
                out.push(Check::new(
                    "dual_bler_le_target",
                    scope.clone(),
                    dual.bler <= BLER_TARGET,
                    format!("{:.4}", dual.bler),
                ));
            }
            let ratio = dual.throughput_bps / r.max_rate_bps;
            out.push(Check::new("dual_rate_ge_70pct_of_max", scope.clone(), ratio >= 0.7, format!("{ratio:.3}")));
        }
        if let [min, med, max] = conventional[..] {
            out.push(Check::new(
                "bler_ordering",
                scope.clone(),
                max.bler >= med.bler && med.bler >= min.bler,
                format!("max {:.4} median {:.4} min {:.4}", max.bler, med.bler, min.bler),
            ));
        }
    }
    out
}

pub fn sweep(cfg: &FileConfig, seed: u64) -> Result<Outcome, CliError> {
    let points = run_points(cfg, seed)?;
    let sec = &cfg.sweep;
    let mut results =
        Table::new(&["inr_db", "scheme", "estimator", "throughput_bps", "bler", "harq_latency_ms", "max_rate_bps"]);
    let mut reports =
        Table::new(&["inr_db", "window", "scheme", "cqi_fading", "cqi_impaired", "indicator_bits", "b_int", "r_int_bps"]);
    let tb = OfdmGeometry::lte(sec.n_rb)?.block_duration();
    for p in &points {
        for m in &p.result.metrics {
            results.push(vec![
                inr_cell(p.inr_db),
                m.scheme.feedback.name().into(),
                m.scheme.estimator.name().into(),
                f(m.throughput_bps, 1),
                f(m.bler, 6),
                f(m.mean_latency_ms, 6),
                f(p.result.max_rate_bps, 1),
            ]);
            for r in &m.reports {
                // Extra feedback over a single report: the impaired-state CQI
                // plus a raw indicator bitmap.
                let (b_int, r_int) = if r.indicator.is_empty() {
                    (0, 0.0)
                } else {
                    let t = sec.t_csi_blocks as u64;
                    let o = feedback_overhead(1, CQI_BITS, t, t, tb)?;
                    (o.b_int, o.r_int)
                };
                let bits: String = r.indicator.iter().map(|&b| if b { '1' } else { '0' }).collect();
                reports.push(vec![
                    inr_cell(p.inr_db),
                    s(r.window),
                    scheme_name(m.scheme),
                    s(r.cqi_fading),
                    opt(r.cqi_impaired),
                    bits,
                    s(b_int),
                    f(r_int, 1),
                ]);
            }
        }
    }
    let checks = sweep_checks(&points, sec.tau_wait_ms * 1e-3);
    Ok(Outcome { tables: vec![("sweep_results.csv", results), ("sweep_reports.csv", reports)], checks })
}
