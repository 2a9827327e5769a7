use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use streamclust::structures::Grids;
use streamclust::{
    detect, select, Configuration, Engine, EngineOptions, Kinds, Mode, Objective, RefineKind, StreamCharacteristics,
    StreamPoint, Summary, Thresholds,
};

fn blobs(seed: u64, n: usize) -> Vec<StreamPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = [[10.0, 10.0], [60.0, 20.0], [30.0, 70.0]];
    (0..n)
        .map(|i| {
            let c = rng.random_range(0..3);
            let x = means[c].iter().map(|m| m + rng.random_range(-2.0..2.0)).collect();
            StreamPoint::new(i as u64, x).with_label(c as i64)
        })
        .collect()
}

#[test]
fn initial_configuration_is_the_all_false_selection() {
    for &objective in Objective::ALL {
        let e = Engine::new(
            Mode::SelfOptimizing(objective),
            Configuration::new("grids,sliding,none,none".parse().unwrap()),
            EngineOptions::default(),
        )
        .unwrap();
        assert_eq!(e.kinds(), select(objective, StreamCharacteristics::default()));
    }
}

#[test]
fn detection_fires_floor_n_over_capacity_times() {
    for (n, cap) in [(0, 10), (9, 10), (10, 10), (2345, 100), (5000, 7)] {
        let mut cfg = Configuration::new("cft,landmark,none,none".parse().unwrap());
        cfg.thresholds.queue_capacity = cap;
        let mut e = Engine::new(Mode::SelfOptimizing(Objective::Balance), cfg, EngineOptions::default()).unwrap();
        for p in blobs(1, n) {
            e.process(&p).unwrap();
        }
        assert_eq!(e.reconfigs().len(), n / cap, "n={n} cap={cap}");
        assert_eq!(e.stats().detections as usize, n / cap);
    }
}

#[test]
fn one_shot_refinement_runs_once_at_the_end() {
    let kinds: Kinds = "cft,landmark,timer,oneshot".parse().unwrap();
    let mut cfg = Configuration::new(kinds);
    cfg.k_hint = Some(3);
    let mut e = Engine::new(Mode::Fixed(kinds), cfg, EngineOptions::default()).unwrap();
    for p in blobs(2, 3000) {
        e.process(&p).unwrap();
    }
    assert_eq!(e.stats().refinements, 0);
    let out = e.finish().unwrap();
    assert_eq!(out.stats.refinements, 1);
    assert_eq!(out.final_snapshot.len(), 3);
}

#[test]
fn incremental_refinement_follows_its_period() {
    let kinds: Kinds = "cft,landmark,none,incremental".parse().unwrap();
    let mut cfg = Configuration::new(kinds);
    cfg.refine.incremental_period = Some(500);
    cfg.thresholds.landmark_period = 100_000;
    let mut e = Engine::new(Mode::Fixed(kinds), cfg, EngineOptions::default()).unwrap();
    for p in blobs(3, 2600) {
        e.process(&p).unwrap();
    }
    assert_eq!(e.stats().refinements, 5);
    let out = e.finish().unwrap();
    assert_eq!(out.stats.refinements, 5);
    assert_eq!(out.final_kinds.refine, RefineKind::Incremental);
}

#[test]
fn window_models_agree_with_no_window_at_first() {
    let pts = blobs(4, 3000);
    let (ws, m) = (700, 900);
    let mut plain = Grids::new(2, 1.0);
    let expected: Vec<u64> = pts.iter().map(|p| plain.insert(p).unwrap().cluster).collect();
    for window in ["landmark", "sliding", "damped"] {
        let kinds: Kinds = format!("grids,{window},none,none").parse().unwrap();
        let mut cfg = Configuration::new(kinds);
        cfg.thresholds.sliding_size = ws;
        cfg.thresholds.landmark_period = m;
        let mut e = Engine::new(Mode::Fixed(kinds), cfg, EngineOptions::default()).unwrap();
        for (i, p) in pts.iter().take(ws.min(m)).enumerate() {
            let got = e.process(p).unwrap();
            assert_eq!(got, expected[i] as i64, "{window} at {i}");
        }
        let w = e.structure().unwrap().total_weight();
        if window != "damped" {
            assert_eq!(w, ws.min(m) as f64);
        }
    }
}

#[test]
fn variance_flag_tracks_twice_the_threshold() {
    let t = Thresholds::default();
    // mean squared distance of a 2-d isotropic Gaussian is 2σ²
    let sigma = t.variance_threshold.sqrt();
    let mut hits = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).unwrap();
        let q: Vec<Vec<f64>> = (0..500)
            .map(|_| vec![normal.sample(&mut rng), normal.sample(&mut rng)])
            .collect();
        if detect(&q, &[], &t).0.frequent_evolution {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn no_selection_keeps_the_initial_kinds() {
    let mut cfg = Configuration::new("grids,sliding,none,none".parse().unwrap());
    cfg.thresholds.queue_capacity = 500;
    let opts = EngineOptions {
        no_selection: true,
        ..EngineOptions::default()
    };
    let mut e = Engine::new(Mode::SelfOptimizing(Objective::Efficiency), cfg, opts).unwrap();
    let mut pts = blobs(5, 1000);
    pts.extend((1000..3000).map(|i| StreamPoint::new(i, vec![(i % 97) as f64 * 10.0, (i % 89) as f64 * 10.0])));
    for p in &pts {
        e.process(p).unwrap();
    }
    assert_eq!(e.reconfigs().len(), 6);
    assert!(e.reconfigs().iter().any(|r| r.flags.frequent_evolution));
    assert!(e.reconfigs().iter().all(|r| r.new == r.old && !r.migrated));
    assert_eq!(e.stats().migrations, 0);
}

#[test]
fn no_migration_sinks_instead_of_carrying() {
    let run = |no_migration| {
        let mut cfg = Configuration::new("grids,sliding,none,none".parse().unwrap());
        cfg.thresholds.queue_capacity = 1000;
        let opts = EngineOptions {
            no_migration,
            ..EngineOptions::default()
        };
        let mut e = Engine::new(Mode::SelfOptimizing(Objective::Accuracy), cfg, opts).unwrap();
        // wide spread: variance crosses the threshold and the structure changes
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for i in 0..1000 {
            e.process(&StreamPoint::new(
                i,
                vec![rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)],
            ))
            .unwrap();
        }
        e
    };
    let carried = run(false);
    let blank = run(true);
    assert_eq!(carried.stats().migrations, 1);
    assert_eq!(blank.stats().migrations, 1);
    assert!(carried.sinks().is_empty());
    assert_eq!(blank.sinks().len(), 1);
    let total = |e: &Engine| e.structure().unwrap().total_weight();
    assert!(total(&carried) > total(&blank));
}
