use super::*;
use crate::constellation::{build_qam, Modulation};
use crate::phy::{build_grid, OfdmGeometry};
use crate::radar::{InterferenceMapper, PulseTrain, RadarConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const TB: f64 = 1e-3;

/// Pulse edges per block for a train with the given period and epoch (s).
fn hit_counts(t_rep: f64, t0: f64, blocks: usize) -> Vec<f64> {
    let mut x = vec![0.0; blocks];
    let mut t = t0;
    loop {
        let b = (t / TB + EDGE_EPS).floor() as usize;
        if b >= blocks {
            break x;
        }
        x[b] += 1.0;
        t += t_rep;
    }
}

fn noisy(x: &[f64], amp: f64, sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    x.iter().map(|v| 1.0 + amp * v + sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

#[test]
fn fundamental_rate_of_synthetic_trains() {
    for (t_rep, want) in [(3.125e-3, 320.0), (5e-3, 200.0), (2.5e-3, 400.0), (4e-3, 250.0)] {
        let x = hit_counts(t_rep, 0.0, 500);
        let e = estimate_prep(&x, 500, TB, DEFAULT_PEAK_THRESHOLD).unwrap().unwrap();
        assert!((e.f_rep - want).abs() <= 2.0, "T {t_rep}: {} Hz", e.f_rep);
        assert_eq!(e.window, 500);
    }
}

#[test]
fn rate_survives_noise() {
    let x = noisy(&hit_counts(3.125e-3, 0.4e-3, 800), 0.05, 0.02, 3);
    let e = estimate_prep(&x, 500, TB, DEFAULT_PEAK_THRESHOLD).unwrap().unwrap();
    assert!((e.f_rep - 320.0).abs() <= 2.0, "{}", e.f_rep);
    assert!(e.confidence >= DEFAULT_PEAK_THRESHOLD);
}

#[test]
fn no_line_means_no_estimate() {
    assert!(estimate_prep(&[2.5; 600], 500, TB, 6.0).unwrap().is_none());
    let white = noisy(&[0.0; 500], 0.0, 1.0, 9);
    assert!(estimate_prep(&white, 500, TB, 6.0).unwrap().is_none());
}

#[test]
fn short_series_is_rejected() {
    assert!(matches!(estimate_prep(&[1.0; 100], 500, TB, 6.0), Err(Error::Input(_))));
    assert!(estimate_prep(&[1.0; 600], 500, 0.0, 6.0).is_err());
}

fn pri(f_rep: f64) -> PriEstimate {
    PriEstimate { f_rep, confidence: 10.0, window: 500 }
}

#[test]
fn lattice_count_of_impaired_blocks() {
    let p = predict_impaired_blocks(Some(&pri(320.0)), 0.0, TB, 0, 25).unwrap();
    assert_eq!(p.len(), 8);
    assert!(p.values().all(|&c| c == 1));
    // The pattern repeats every 25 blocks.
    let q = predict_impaired_blocks(Some(&pri(320.0)), 0.0, TB, 25, 25).unwrap();
    let shifted: Vec<u64> = q.keys().map(|b| b - 25).collect();
    assert_eq!(shifted, p.keys().copied().collect::<Vec<_>>());
    // Independent oracle: block b holds an edge iff some m has floor(3.125 m) = b.
    let want: Vec<u64> = (0..25u64).filter(|&b| (0..9u64).any(|m| (m * 3125) / 1000 == b)).collect();
    assert_eq!(p.keys().copied().collect::<Vec<_>>(), want);
}

#[test]
fn every_block_and_every_other_block() {
    let all = predict_impaired_blocks(Some(&pri(1000.0)), 0.0, TB, 0, 40).unwrap();
    assert_eq!(all.len(), 40);
    let even = predict_impaired_blocks(Some(&pri(500.0)), 0.5e-3, TB, 0, 40).unwrap();
    assert_eq!(even.keys().copied().collect::<Vec<_>>(), (0..40).step_by(2).collect::<Vec<u64>>());
    assert!(predict_impaired_blocks(None, 0.0, TB, 0, 10).is_err());
}

#[test]
fn two_edges_in_one_block_are_counted() {
    let p = predict_impaired_blocks(Some(&pri(2500.0)), 0.1e-3, TB, 0, 4).unwrap();
    assert!(p.values().all(|&c| c >= 2));
}

#[test]
fn prediction_matches_mapped_interference() {
    let geom = OfdmGeometry::lte(50).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for t_rep in [3.125e-3, 2.5e-3, 4e-3, 5e-3, 1.5e-3] {
        for _ in 0..3 {
            let t0 = rng.random::<f64>() * t_rep;
            let cfg = RadarConfig { t_rep, t0, ..RadarConfig::default() };
            let mapper = InterferenceMapper::new(&geom, &cfg).unwrap();
            let blocks = 40;
            let train = PulseTrain::new(&cfg, blocks as f64 * TB, 5).unwrap();
            let gains = vec![Complex64::new(1.0, 0.0); train.len()];
            let hit: Vec<u64> = (0..blocks as u64)
                .filter(|&b| !mapper.re_interference_map(&train, b, &gains).unwrap().is_clean())
                .collect();
            let pred = predict_impaired_blocks(Some(&pri(1.0 / t_rep)), t0, TB, 0, blocks).unwrap();
            assert_eq!(pred.keys().copied().collect::<Vec<_>>(), hit, "T {t_rep} t0 {t0}");
        }
    }
}

#[test]
fn pulse_inside_a_cyclic_prefix_is_predicted_but_invisible() {
    // Edges on the block lattice put the whole 5 µs pulse in the 5.2 µs
    // prefix of symbol 0; the block is flagged though nothing is received.
    let geom = OfdmGeometry::lte(50).unwrap();
    let cfg = RadarConfig { t0: 0.0, ..RadarConfig::default() };
    let mapper = InterferenceMapper::new(&geom, &cfg).unwrap();
    let train = PulseTrain::new(&cfg, 30.0 * TB, 5).unwrap();
    let gains = vec![Complex64::new(1.0, 0.0); train.len()];
    assert!(mapper.re_interference_map(&train, 0, &gains).unwrap().is_clean());
    let pred = predict_impaired_blocks(Some(&pri(320.0)), 0.0, TB, 0, 1).unwrap();
    assert!(pred.contains_key(&0));
}

#[test]
fn lock_recovers_timing() {
    for (t_rep, t0) in [(3.125e-3, 0.37e-3), (4.7e-3, 1.93e-3), (2.2e-3, 0.05e-3)] {
        let x = noisy(&hit_counts(t_rep, t0, 1500), 0.05, 0.01, 11);
        let lock = lock_onto(&x[500..1000], 500, TB, DEFAULT_PEAK_THRESHOLD).unwrap().unwrap();
        let pred = lock.predict(TB, 1000, 500);
        let truth = hit_counts(t_rep, t0, 1500);
        let want: Vec<u64> = (1000..1500u64).filter(|&b| truth[b as usize] > 0.0).collect();
        assert_eq!(pred.keys().copied().collect::<Vec<_>>(), want, "T {t_rep}");
    }
}

#[test]
fn tracker_locks_after_one_window() {
    let x = noisy(&hit_counts(3.125e-3, 0.81e-3, 2000), 0.05, 0.01, 4);
    let mut tr = PriTracker::new(TrackerConfig::new(TB)).unwrap();
    for (b, v) in x.iter().enumerate() {
        if b < 500 {
            assert!(tr.lock().is_none());
            assert_eq!(tr.expected_pulses(b as u64), 0);
        } else {
            let want = x_truth(b);
            assert_eq!(tr.expected_pulses(b as u64), want, "block {b}");
        }
        tr.push(*v).unwrap();
    }
    let f = tr.lock().unwrap().estimate.f_rep;
    assert!((f - 320.0).abs() < 0.5, "{f}");

    fn x_truth(b: usize) -> u32 {
        hit_counts(3.125e-3, 0.81e-3, b + 1)[b] as u32
    }
}

#[test]
fn tracker_stays_unlocked_without_radar() {
    let x = noisy(&[0.0; 1200], 0.0, 0.01, 8);
    let mut tr = PriTracker::new(TrackerConfig::new(TB)).unwrap();
    for v in x {
        tr.push(v).unwrap();
    }
    assert!(tr.lock().is_none());
}

#[test]
fn npi_reference_is_a_lower_median() {
    let mut r = NpiReference::new(8).unwrap();
    assert!(r.reference().is_none());
    for v in [15.0, 3.0, 14.0, 16.0] {
        r.push(v);
    }
    assert_eq!(r.reference(), Some(14.0));
    for _ in 0..8 {
        r.push(20.0);
    }
    assert_eq!(r.reference(), Some(20.0));
    assert!(NpiReference::new(0).is_err());
}

#[test]
fn pilot_contamination_threshold() {
    assert_eq!(detect_pilot_contamination(12.0, 15.0, 1.0), Contamination::PilotImpaired);
    assert_eq!(detect_pilot_contamination(14.5, 15.0, 1.0), Contamination::NonPilotImpaired);
    assert_eq!(detect_pilot_contamination(14.0, 15.0, 1.0), Contamination::PilotImpaired);
}

fn block(modulation: Modulation, seed: u64) -> (ResourceGrid, Constellation) {
    let geom = OfdmGeometry::lte(6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (build_grid(&geom, modulation, &mut rng).unwrap(), modulation.constellation())
}

#[test]
fn noiseless_hit_symbol_is_found() {
    let (grid, c) = block(Modulation::Qam16, 1);
    let mut y = grid.symbols().to_vec();
    let nk = grid.n_subcarriers;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..nk {
        y[grid.index(9, k)] += Complex64::from_polar(0.3, rng.random::<f64>() * TAU);
    }
    let g = vec![100.0; y.len()];
    let found = detect_contaminated_symbol(&y, &g, &grid, &c, &grid.non_pilot_symbols(), 1).unwrap();
    assert_eq!(found, vec![9]);

    for k in 0..nk {
        y[grid.index(2, k)] += Complex64::from_polar(0.25, rng.random::<f64>() * TAU);
    }
    let mut two = detect_contaminated_symbol(&y, &g, &grid, &c, &grid.non_pilot_symbols(), 2).unwrap();
    two.sort();
    assert_eq!(two, vec![2, 9]);
    assert!(detect_contaminated_symbol(&y, &g, &grid, &c, &[2], 0).is_err());
}

#[test]
fn hybrid_grid_dispatch() {
    let (grid, c) = block(Modulation::Qam16, 3);
    let mut y = grid.symbols().to_vec();
    for k in 0..grid.n_subcarriers {
        y[grid.index(5, k)] += Complex64::new(0.2, 0.1);
    }
    let g = vec![50.0; y.len()];
    let clean = hybrid_sinr_grid(&grid, &y, &g, &c, 12, Some(&Detection::Clean)).unwrap();
    let pilot = hybrid_sinr_grid(&grid, &y, &g, &c, 12, Some(&Detection::PilotImpaired)).unwrap();
    for s in [&clean, &pilot] {
        for (i, r) in grid.roles().iter().enumerate() {
            assert_eq!(s.sources[i].is_some(), *r == Role::Data);
            assert!(s.sources[i].is_none_or(|t| t == SinrSource::Pilot));
        }
    }
    let d = Detection::NonPilotImpaired { symbols: vec![5] };
    let h = hybrid_sinr_grid(&grid, &y, &g, &c, 12, Some(&d)).unwrap();
    for n in 0..grid.n_symbols {
        for k in 0..grid.n_subcarriers {
            let want = match grid.role(n, k) {
                Role::Pilot => None,
                Role::Data if n == 5 => Some(SinrSource::Heuristic),
                Role::Data => Some(SinrSource::Pilot),
            };
            assert_eq!(h.source(n, k), want);
        }
    }
    assert!(hybrid_sinr_grid(&grid, &y, &g, &c, 12, None).is_err());
    let empty = Detection::NonPilotImpaired { symbols: vec![] };
    assert!(matches!(hybrid_sinr_grid(&grid, &y, &g, &c, 12, Some(&empty)), Err(Error::Contract(_))));
}

#[test]
fn reconstruction_examples() {
    let x = [Complex64::new(1.0, 0.0)];
    assert_eq!(reconstruction_sinr(&x, &x, true).unwrap()[0], sinr_ceiling());
    let v = reconstruction_sinr(&x, &[Complex64::new(1.1, 0.0)], true).unwrap()[0];
    assert!((v - 100.0).abs() < 1e-9);
    assert!(matches!(reconstruction_sinr(&x, &x, false), Err(Error::Contract(_))));
    assert!(reconstruction_block_sinr(&x, &x, false, 12).is_err());
    let b = reconstruction_block_sinr(&[x[0], x[0]], &[Complex64::new(1.1, 0.0), x[0]], true, 2).unwrap();
    assert!((b[0] - 200.0).abs() < 1e-9);
}

fn detector_fixture() -> (ResourceGrid, Constellation, Vec<Complex64>) {
    let (grid, c) = block(Modulation::Qpsk, 7);
    let h = vec![Complex64::new(1.0, 0.0); grid.symbols().len()];
    (grid, c, h)
}

#[test]
fn estimator_flags_predicted_blocks_only() {
    let (grid, c, h) = detector_fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut est = HybridEstimator::new(DetectorConfig::new(TB)).unwrap();
    let truth = hit_counts(3.125e-3, 0.3e-3, 1200);
    let nk = grid.n_subcarriers;
    let mut found = 0;
    let mut impaired = 0;
    for (b, &hits) in truth.iter().enumerate() {
        let mut y: Vec<Complex64> = grid
            .symbols()
            .iter()
            .map(|&x| x + Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * 0.03)
            .collect();
        let hit_symbol = 1 + (b % 3) * 4 + 1;
        if hits > 0.0 {
            for k in 0..nk {
                y[grid.index(hit_symbol, k)] += Complex64::from_polar(0.4, rng.random::<f64>() * TAU);
            }
        }
        let g = vec![500.0; y.len()];
        let obs = BlockObservation { grid: &grid, constellation: &c, h_est: &h, y: &y, pilot_sinr: &g };
        let r = est.process(&obs).unwrap();
        assert_eq!(r.block, b as u64);
        if b >= 500 {
            assert_eq!(r.predicted_pulses as f64, hits, "block {b}");
            if let Detection::NonPilotImpaired { symbols } = &r.detection {
                impaired += 1;
                found += usize::from(symbols == &vec![hit_symbol]);
            }
        }
    }
    assert!(impaired > 200 && found == impaired, "{found}/{impaired}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dispatch_is_exhaustive(seed in 0u64..1000, picks in proptest::collection::btree_set(0usize..10, 1..4)) {
        let (grid, c) = block(Modulation::Qam64, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<Complex64> = grid
            .symbols()
            .iter()
            .map(|&x| x + Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * 0.05)
            .collect();
        let np = grid.non_pilot_symbols();
        let symbols: Vec<usize> = picks.iter().map(|&i| np[i]).collect();
        let g = vec![30.0; y.len()];
        let h = hybrid_sinr_grid(&grid, &y, &g, &c, 12, Some(&Detection::NonPilotImpaired { symbols: symbols.clone() })).unwrap();
        for n in 0..grid.n_symbols {
            for k in 0..grid.n_subcarriers {
                let tag = h.source(n, k);
                prop_assert_eq!(tag.is_some(), grid.role(n, k) == Role::Data);
                if symbols.contains(&n) {
                    prop_assert_eq!(tag, Some(SinrSource::Heuristic));
                    let first = (k / 12) * 12;
                    prop_assert_eq!(h.values[grid.index(n, k)], h.values[grid.index(n, first)]);
                }
            }
        }
    }

    #[test]
    fn nearest_neighbour_bounds_reconstruction_for_qpsk(re in -2.0..2.0f64, im in -2.0..2.0f64, j in 0usize..4) {
        let c = build_qam(4).unwrap();
        let x = c.point(j);
        let y = Complex64::new(re, im);
        let nn = c.point(c.slice(y));
        let rec = reconstruction_sinr(&[x], &[y], true).unwrap()[0];
        let blind = reconstruction_sinr(&[nn], &[y], true).unwrap()[0];
        prop_assert!(blind >= rec);
    }
}
