//! Acceptance suite. Runs the ten criteria in order, prints one PASS/FAIL
//! line per criterion and exits non-zero if any failed. Pass criterion
//! numbers as arguments to run a subset.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use streamclust::datagen::{gen_dim, gen_eds, gen_ods, DimConfig, EdsConfig, OdsConfig};
use streamclust::outlier::{outlier_step, regular_check, OutlierBuffer};
use streamclust::window::{WindowAction, WindowState};
use streamclust::{
    build, cf_merge, migrate, purity, run_pipeline, select, ClusterFeature, Configuration, Engine, EngineOptions,
    Kinds, Mode, Objective, OutlierKind, PipelineOptions, RefineKind, StreamCharacteristics, StreamPoint,
    StructureKind, Thresholds, WindowKind,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn kinds(s: &str) -> Kinds {
    s.parse().expect("valid kinds")
}

fn gaussian(rng: &mut ChaCha8Rng, mean: &[f64], sigma: f64) -> Vec<f64> {
    mean.iter()
        .map(|m| {
            let z: f64 = StandardNormal.sample(rng);
            m + sigma * z
        })
        .collect()
}

/// Points from a fixed mixture of `k` components in `[0, extent]^dim`.
fn mixture(seed: u64, n: usize, dim: usize, k: usize, extent: f64, sigma: f64) -> Vec<StreamPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..extent)).collect())
        .collect();
    (0..n)
        .map(|i| {
            let c = rng.random_range(0..k);
            StreamPoint::new(i as u64, gaussian(&mut rng, &means[c], sigma)).with_label(c as i64)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// 1. selection table

fn criterion_selection() -> Outcome {
    // (objective, frequent_evolution, many_outliers, high_dimension) -> kinds
    let table: [(&str, bool, bool, bool, &str); 24] = [
        ("accuracy", false, false, false, "cft,damped,buffertimer,incremental"),
        ("accuracy", false, false, true, "cft,damped,buffer,incremental"),
        ("accuracy", false, true, false, "cft,landmark,buffertimer,incremental"),
        ("accuracy", false, true, true, "cft,landmark,buffertimer,incremental"),
        ("accuracy", true, false, false, "mcs,damped,buffertimer,incremental"),
        ("accuracy", true, false, true, "mcs,damped,buffer,incremental"),
        ("accuracy", true, true, false, "mcs,landmark,buffertimer,incremental"),
        ("accuracy", true, true, true, "mcs,landmark,buffertimer,incremental"),
        ("efficiency", false, false, false, "grids,sliding,none,none"),
        ("efficiency", false, false, true, "grids,sliding,none,none"),
        ("efficiency", false, true, false, "grids,sliding,none,none"),
        ("efficiency", false, true, true, "grids,sliding,none,none"),
        ("efficiency", true, false, false, "dpt,landmark,none,none"),
        ("efficiency", true, false, true, "dpt,landmark,none,none"),
        ("efficiency", true, true, false, "dpt,landmark,none,none"),
        ("efficiency", true, true, true, "dpt,landmark,none,none"),
        ("balance", false, false, false, "coret,landmark,timer,oneshot"),
        ("balance", false, false, true, "coret,landmark,timer,oneshot"),
        ("balance", false, true, false, "coret,landmark,timer,oneshot"),
        ("balance", false, true, true, "coret,landmark,timer,oneshot"),
        ("balance", true, false, false, "cft,landmark,timer,oneshot"),
        ("balance", true, false, true, "cft,landmark,timer,oneshot"),
        ("balance", true, true, false, "cft,landmark,timer,oneshot"),
        ("balance", true, true, true, "cft,landmark,timer,oneshot"),
    ];
    let mut mismatches = Vec::new();
    for (obj, fe, mo, hd, expected) in table {
        let objective: Objective = obj.parse().unwrap();
        let ch = StreamCharacteristics {
            high_dimension: hd,
            frequent_evolution: fe,
            many_outliers: mo,
        };
        let got = select(objective, ch);
        if got != kinds(expected) {
            mismatches.push(format!("{obj} {ch:?}: got {got}, want {expected}"));
        }
    }
    Outcome::new(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "24/24 rows match".to_string()
        } else {
            mismatches.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------
// 2. CF algebra

fn cf_close(a: &ClusterFeature, b: &ClusterFeature, tol: f64) -> bool {
    rel_close(a.n, b.n, tol)
        && rel_close(a.ss, b.ss, tol)
        && rel_close(a.t_sum, b.t_sum, tol)
        && rel_close(a.t_sq, b.t_sq, tol)
        && a.ls
            .iter()
            .zip(&b.ls)
            .all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<StreamPoint> {
    let shift: f64 = rng.random_range(-100.0..100.0);
    (0..n)
        .map(|i| {
            let x = (0..dim).map(|_| shift + rng.random_range(-10.0..10.0)).collect();
            StreamPoint::new(i as u64, x)
                .with_weight(rng.random_range(0.5..3.0))
                .with_timestamp(rng.random_range(0..1000))
        })
        .collect()
}

fn cf_of(points: &[StreamPoint], dim: usize) -> ClusterFeature {
    let mut cf = ClusterFeature::empty(dim);
    for p in points {
        cf.insert(p).unwrap();
    }
    cf
}

fn criterion_cf_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tol = 1e-6;
    let mut failures = Vec::new();
    for trial in 0..1000 {
        let dim = rng.random_range(1..8);
        let n = rng.random_range(3..40);
        let pts = random_points(&mut rng, n, dim);
        let (i, j) = {
            let a = rng.random_range(1..n - 1);
            (a, rng.random_range(a + 1..n))
        };
        let (a, b, c) = (cf_of(&pts[..i], dim), cf_of(&pts[i..j], dim), cf_of(&pts[j..], dim));
        let whole = cf_of(&pts, dim);

        // additivity: merging the parts equals summarizing the union
        let ab = cf_merge(&a, &b).unwrap();
        let abc = cf_merge(&ab, &c).unwrap();
        if !cf_close(&abc, &whole, tol) {
            failures.push(format!("trial {trial}: additivity"));
        }
        // associativity and commutativity
        let bc = cf_merge(&b, &c).unwrap();
        let a_bc = cf_merge(&a, &bc).unwrap();
        let cba = cf_merge(&cf_merge(&c, &b).unwrap(), &a).unwrap();
        if !cf_close(&abc, &a_bc, tol) || !cf_close(&abc, &cba, tol) {
            failures.push(format!("trial {trial}: associativity"));
        }
        // pooled radius against a direct two-pass computation
        let total: f64 = pts.iter().map(|p| p.weight).sum();
        let mean: Vec<f64> = (0..dim)
            .map(|k| pts.iter().map(|p| p.weight * p.values[k]).sum::<f64>() / total)
            .collect();
        let var: f64 = pts
            .iter()
            .map(|p| p.weight * p.values.iter().zip(&mean).map(|(x, m)| (x - m).powi(2)).sum::<f64>())
            .sum::<f64>()
            / total;
        let centroid_ok = abc
            .centroid()
            .iter()
            .zip(&mean)
            .all(|(x, m)| (x - m).abs() <= tol * m.abs().max(1.0));
        let r = abc.radius();
        let radius_ok = (r - var.sqrt()).abs() <= tol * var.sqrt().max(1.0);
        if !centroid_ok || !radius_ok {
            failures.push(format!("trial {trial}: pooled radius {r} vs {}", var.sqrt()));
        }
        // subtraction undoes a merge
        let mut back = abc.clone();
        back.subtract(&c).unwrap();
        if !cf_close(&back, &ab, 1e-6) {
            failures.push(format!("trial {trial}: subtraction"));
        }
    }
    Outcome::new(
        failures.is_empty(),
        if failures.is_empty() {
            "1000 trials, additivity/associativity/radius/subtraction hold".to_string()
        } else {
            format!("{} failures, first: {}", failures.len(), failures[0])
        },
    )
}

// ---------------------------------------------------------------------------
// 3. window laws

fn unit_stream(rng: &mut ChaCha8Rng, n: usize) -> Vec<StreamPoint> {
    (0..n)
        .map(|i| StreamPoint::new(i as u64, vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]))
        .collect()
}

fn fixed_engine(k: &str, t: Thresholds) -> Engine {
    let mut cfg = Configuration::new(kinds(k));
    cfg.thresholds = t;
    Engine::new(Mode::Fixed(kinds(k)), cfg, EngineOptions::default()).unwrap()
}

fn criterion_window_laws() -> Outcome {
    let n = 10_000;
    let mut problems = Vec::new();
    for stream in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + stream);
        let pts = unit_stream(&mut rng, n);

        // damped: total weight follows the geometric series
        let lambda = rng.random_range(1e-4..1e-2);
        let mut t = Thresholds::default();
        t.decay.lambda = lambda;
        let structure = if stream % 2 == 0 { "grids" } else { "cft" };
        let mut e = fixed_engine(&format!("{structure},damped,none,none"), t);
        for p in &pts {
            e.process(p).unwrap();
        }
        let q = 2f64.powf(-lambda);
        let expected = (1.0 - q.powi(n as i32)) / (1.0 - q);
        let got = e.structure().unwrap().total_weight();
        if !rel_close(got, expected, 1e-9) {
            problems.push(format!("stream {stream}: damped weight {got} vs {expected}"));
        }

        // sliding: weight never exceeds ws and equals min(i, ws)
        let ws = rng.random_range(50..2000);
        let t = Thresholds {
            sliding_size: ws,
            ..Thresholds::default()
        };
        let mut e = fixed_engine("grids,sliding,none,none", t);
        for (i, p) in pts.iter().enumerate() {
            e.process(p).unwrap();
            let w = e.structure().unwrap().total_weight();
            let want = (i + 1).min(ws) as f64;
            if w > ws as f64 + 1e-9 || (w - want).abs() > 1e-6 {
                problems.push(format!("stream {stream}: sliding weight {w} at {i}, ws {ws}"));
                break;
            }
        }

        // landmark: the summary and buffer are empty right after each sink
        let m = rng.random_range(100..3000);
        let t = Thresholds {
            landmark_period: m,
            ..Thresholds::default()
        };
        let cfg = Configuration::new(kinds("cft,landmark,buffertimer,none"));
        let mut s = build(StructureKind::Cft, 2, &cfg).unwrap();
        let mut buffer = OutlierBuffer::new(50, 2.0);
        buffer.push(ClusterFeature::from_weighted(&[500.0, 500.0], 1.0, 0));
        let mut w = WindowState::new(WindowKind::Landmark, &t);
        let mut sinks = 0;
        for (i, p) in pts.iter().enumerate() {
            if let WindowAction::Sunk(snap) = w.step(s.as_mut(), &mut buffer, 0, p).unwrap() {
                sinks += 1;
                let expected = if sinks == 1 { m as f64 + 1.0 } else { m as f64 };
                let sunk = snap.total_weight() + snap.outlier_weight();
                if !s.is_empty() || !buffer.is_empty() || (sunk - expected).abs() > 1e-6 {
                    problems.push(format!(
                        "stream {stream}: landmark at {i} left {} / sunk {sunk}",
                        s.total_weight()
                    ));
                    break;
                }
            }
            s.insert(p).unwrap();
        }
        if sinks != (n - 1) / m {
            problems.push(format!("stream {stream}: {sinks} sinks for m = {m}"));
        }
    }
    Outcome::new(
        problems.is_empty(),
        if problems.is_empty() {
            "100 streams x 10^4 points: damped series, sliding cap, landmark emptiness".to_string()
        } else {
            format!("{} violations, first: {}", problems.len(), problems[0])
        },
    )
}

// ---------------------------------------------------------------------------
// 4. outlier mechanics

fn criterion_outlier_mechanics() -> Outcome {
    let mut problems = Vec::new();
    let cfg = Configuration::new(kinds("cft,landmark,buffer,none"));

    // promotion happens exactly on the d-th buffered point
    for d in 2..=12 {
        for kind in [StructureKind::Cft, StructureKind::Grids, StructureKind::MCs] {
            let mut s = build(kind, 2, &cfg).unwrap();
            s.insert(&StreamPoint::new(0, vec![0.0, 0.0])).unwrap();
            let mut buffer = OutlierBuffer::new(10, 2.0);
            for k in 1..=d {
                let p = StreamPoint::new(k as u64, vec![1000.0, 1000.0]);
                let v = outlier_step(OutlierKind::Buffer, &p, 1.0, s.as_mut(), &mut buffer, 100.0, d as f64).unwrap();
                let promoted = v.promoted.is_some();
                if !v.is_outlier || promoted != (k == d) {
                    problems.push(format!("{kind} d={d}: point {k} promoted={promoted}"));
                }
            }
            if !rel_close(s.total_weight(), 1.0 + d as f64, 1e-12) || !buffer.is_empty() {
                problems.push(format!("{kind} d={d}: weight after promotion {}", s.total_weight()));
            }
        }
    }

    // timer: a sparse cluster last updated at u survives until now = u + t
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let u: u64 = rng.random_range(0..10_000);
        let t: u64 = rng.random_range(1..5_000);
        for (now, keep) in [(u + t, true), (u + t + 1, false)] {
            let mut s = build(StructureKind::Grids, 2, &cfg).unwrap();
            s.insert(&StreamPoint::new(0, vec![5.0, 5.0]).with_timestamp(u))
                .unwrap();
            let mut buffer = OutlierBuffer::new(10, 2.0);
            let r = regular_check(OutlierKind::Timer, s.as_mut(), &mut buffer, 4.0, t as f64, now).unwrap();
            if s.is_empty() == keep || r.removed.is_empty() == !keep {
                problems.push(format!("timer u={u} t={t} now={now}: kept={}", !s.is_empty()));
            }
        }
    }

    // mechanism None is the same as plain insertion
    for seed in 0..5 {
        let pts = mixture(40 + seed, 5000, 2, 5, 100.0, 2.0);
        let t = Thresholds {
            landmark_period: 1_000_000,
            ..Thresholds::default()
        };
        for structure in ["cft", "grids", "mcs", "coret", "dpt"] {
            let mut e = fixed_engine(&format!("{structure},landmark,none,none"), t.clone());
            let mut plain = build(structure.parse().unwrap(), 2, e.config()).unwrap();
            for p in &pts {
                e.process(p).unwrap();
                plain.insert(p).unwrap();
            }
            let ours = e.structure().unwrap().snapshot();
            if format!("{ours:?}") != format!("{:?}", plain.snapshot()) {
                problems.push(format!("seed {seed} {structure}: snapshots differ"));
            }
        }
    }
    Outcome::new(
        problems.is_empty(),
        if problems.is_empty() {
            "promotion at d, timer boundary, None equivalence".to_string()
        } else {
            format!("{} violations, first: {}", problems.len(), problems[0])
        },
    )
}

// ---------------------------------------------------------------------------
// 5. migration conservation

const STRUCTURES: [StructureKind; 6] = [
    StructureKind::Cft,
    StructureKind::CoreT,
    StructureKind::Dpt,
    StructureKind::MCs,
    StructureKind::Grids,
    StructureKind::AmSketch,
];

fn criterion_migration() -> Outcome {
    let mut problems = Vec::new();
    let pts = mixture(5, 3000, 2, 5, 100.0, 2.0);
    let mut pairs = 0;
    for &from in &STRUCTURES {
        for &to in &STRUCTURES {
            if from == to {
                continue;
            }
            pairs += 1;
            let mut cfg = Configuration::new(Kinds::new(
                from,
                WindowKind::Landmark,
                OutlierKind::None,
                RefineKind::None,
            ));
            cfg.k_hint = Some(5);
            for objective in [Objective::Accuracy, Objective::Efficiency] {
                let mut old = build(from, 2, &cfg).unwrap();
                for p in &pts {
                    old.insert(p).unwrap();
                }
                old.flush();
                let before = old.total_weight();
                let new_cfg = cfg.with_kinds(Kinds::new(
                    to,
                    WindowKind::Landmark,
                    OutlierKind::None,
                    RefineKind::None,
                ));
                let mut buffer = OutlierBuffer::new(10, 2.0);
                let m = migrate(objective, &new_cfg, old, OutlierKind::None, &mut buffer).unwrap();
                let mut s = m.structure;
                s.flush();
                match objective {
                    Objective::Accuracy => {
                        if !m.migrated || !rel_close(s.total_weight(), before, 1e-6) {
                            problems.push(format!("accuracy {from}->{to}: {} vs {before}", s.total_weight()));
                        }
                    }
                    _ => {
                        let sunk = m.sunk.as_ref().map_or(0.0, |x| x.total_weight());
                        if !s.is_empty() || !rel_close(sunk, before, 1e-6) {
                            problems.push(format!(
                                "efficiency {from}->{to}: sunk {sunk} vs {before}, left {}",
                                s.total_weight()
                            ));
                        }
                    }
                }
            }
        }
    }
    Outcome::new(
        problems.is_empty() && pairs == 30,
        if problems.is_empty() {
            format!("{pairs} ordered pairs conserve weight")
        } else {
            format!("{} violations, first: {}", problems.len(), problems[0])
        },
    )
}

// ---------------------------------------------------------------------------
// 6. detection responsiveness

fn criterion_detection() -> Outcome {
    let capacity = 2000u64;
    let mut hits = 0;
    let mut misses = Vec::new();
    for seed in 0..20 {
        let stream = gen_ods(&OdsConfig {
            points: 30_000,
            seed,
            ..OdsConfig::default()
        })
        .unwrap();
        let boundary = stream.boundaries[2];
        assert_eq!(boundary, 15_000);
        let mut cfg = Configuration::new(select(Objective::Accuracy, StreamCharacteristics::default()));
        cfg.thresholds.queue_capacity = capacity as usize;
        let mut e = Engine::new(Mode::SelfOptimizing(Objective::Accuracy), cfg, EngineOptions::default()).unwrap();
        for p in &stream.points {
            e.process(p).unwrap();
        }
        // first window [a, a + capacity) with a >= boundary, closed at offset a + capacity
        let first_inside = boundary.div_ceil(capacity) * capacity + capacity;
        let flag_at = |offset: u64| {
            e.reconfigs()
                .iter()
                .find(|r| r.offset == offset)
                .map(|r| r.flags.many_outliers)
        };
        let before = flag_at(first_inside - capacity);
        let after = flag_at(first_inside);
        if before == Some(false) && after == Some(true) {
            hits += 1;
        } else {
            misses.push(format!("seed {seed}: {before:?}->{after:?}"));
        }
    }
    Outcome::new(
        hits >= 18,
        format!(
            "{hits}/20 seeds flip false->true at the first full outlier window {}",
            misses.join(" ")
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. self-optimizing vs static baseline on ODS

fn ods_mean_purity(seed: u64, mode: Mode, options: EngineOptions) -> f64 {
    let stream = gen_ods(&OdsConfig {
        seed,
        ..OdsConfig::default()
    })
    .unwrap();
    let mut cfg = Configuration::new(kinds("grids,sliding,none,none"));
    cfg.seed = seed;
    cfg.thresholds.queue_capacity = 2000;
    let r = run_pipeline(
        stream.into_source(),
        mode,
        cfg,
        options,
        PipelineOptions {
            threaded: false,
            ..PipelineOptions::default()
        },
    )
    .unwrap();
    r.purity.mean().unwrap()
}

fn criterion_motivation() -> Outcome {
    let seeds = 0..5u64;
    let n = 5.0;
    let (mut full, mut baseline, mut ablated) = (0.0, 0.0, 0.0);
    for seed in seeds {
        full += ods_mean_purity(
            seed,
            Mode::SelfOptimizing(Objective::Accuracy),
            EngineOptions::default(),
        );
        baseline += ods_mean_purity(
            seed,
            Mode::Fixed(kinds("grids,sliding,none,none")),
            EngineOptions::default(),
        );
        ablated += ods_mean_purity(
            seed,
            Mode::SelfOptimizing(Objective::Accuracy),
            EngineOptions {
                no_selection: true,
                ..EngineOptions::default()
            },
        );
    }
    let (full, baseline, ablated) = (full / n, baseline / n, ablated / n);
    Outcome::new(
        full - baseline >= 0.05 && ablated < full,
        format!("self-optimizing {full:.4}, static baseline {baseline:.4}, no-selection {ablated:.4}"),
    )
}

// ---------------------------------------------------------------------------
// 8. efficiency vs accuracy throughput

fn criterion_throughput() -> Outcome {
    let pts = mixture(8, 100_000, 2, 5, 100.0, 2.0);
    let run = |objective| {
        let mut cfg = Configuration::new(kinds("grids,sliding,none,none"));
        cfg.seed = 8;
        let r = run_pipeline(
            pts.iter().cloned().map(Ok),
            Mode::SelfOptimizing(objective),
            cfg,
            EngineOptions::default(),
            PipelineOptions::default(),
        )
        .unwrap();
        (r.throughput.unwrap(), r.final_kinds)
    };
    let (acc, acc_kinds) = run(Objective::Accuracy);
    let (eff, eff_kinds) = run(Objective::Efficiency);
    Outcome::new(
        eff >= 2.0 * acc,
        format!(
            "efficiency {eff:.0} pts/s ({eff_kinds}) vs accuracy {acc:.0} pts/s ({acc_kinds}), ratio {:.2}",
            eff / acc
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. purity oracle

fn brute_force_purity(items: &[(i64, i64)]) -> f64 {
    let mut clusters: Vec<i64> = items.iter().map(|&(_, c)| c).collect();
    clusters.sort_unstable();
    clusters.dedup();
    let mut labels: Vec<i64> = items.iter().map(|&(l, _)| l).collect();
    labels.sort_unstable();
    labels.dedup();
    let mut hits = 0usize;
    for &c in &clusters {
        let best = labels
            .iter()
            .map(|&l| items.iter().filter(|&&(il, ic)| ic == c && il == l).count())
            .max()
            .unwrap_or(0);
        hits += best;
    }
    hits as f64 / items.len() as f64
}

fn criterion_purity_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bad = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..300);
        let labels = rng.random_range(1..8);
        let clusters = rng.random_range(1..30);
        let items: Vec<(i64, i64)> = (0..n)
            .map(|_| (rng.random_range(-1..labels), rng.random_range(-1..clusters)))
            .collect();
        if purity(&items).unwrap() != brute_force_purity(&items) {
            bad += 1;
        }
    }
    Outcome::new(bad == 0, format!("{} of 1000 partitions match exactly", 1000 - bad))
}

// ---------------------------------------------------------------------------
// 10. pipeline integrity

fn criterion_pipeline() -> Outcome {
    let streams = vec![
        (
            "eds",
            gen_eds(&EdsConfig {
                points: 20_000,
                seed: 10,
                ..EdsConfig::default()
            })
            .unwrap(),
        ),
        (
            "ods",
            gen_ods(&OdsConfig {
                points: 12_000,
                seed: 10,
                ..OdsConfig::default()
            })
            .unwrap(),
        ),
        (
            "dim",
            gen_dim(&DimConfig {
                dims: vec![20, 40],
                points_per_segment: 3000,
                seed: 10,
                ..DimConfig::default()
            })
            .unwrap(),
        ),
    ];
    let capacity = 64;
    let mut problems = Vec::new();
    for (name, stream) in streams {
        let n = stream.points.len() as u64;
        let mut series = Vec::new();
        for threaded in [true, false] {
            let mut cfg = Configuration::new(kinds("grids,sliding,none,none"));
            cfg.thresholds.queue_capacity = 2000;
            cfg.seed = 10;
            let r = run_pipeline(
                stream.points.clone().into_iter().map(Ok),
                Mode::SelfOptimizing(Objective::Accuracy),
                cfg,
                EngineOptions::default(),
                PipelineOptions {
                    threaded,
                    channel_capacity: capacity,
                    eval_window: 1000,
                },
            )
            .unwrap();
            if r.incomplete || r.points_processed != n || r.collector_tuples != n {
                problems.push(format!(
                    "{name} threaded={threaded}: {} processed, {} collected",
                    r.points_processed, r.collector_tuples
                ));
            }
            if r.max_queue_occupancy > capacity {
                problems.push(format!("{name}: queue reached {}", r.max_queue_occupancy));
            }
            let log: Vec<(Option<i64>, i64)> = r.assignments.iter().map(|a| (a.label, a.cluster)).collect();
            let replay = streamclust::PuritySeries::from_log(1000, &log);
            if replay != r.purity {
                problems.push(format!("{name} threaded={threaded}: replayed purity differs"));
            }
            series.push(r.purity);
        }
        if series[0] != series[1] {
            problems.push(format!("{name}: threaded and inline purity differ"));
        }
    }
    Outcome::new(
        problems.is_empty(),
        if problems.is_empty() {
            "3 generators: no loss, queue bounded, modes agree, log replays".to_string()
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "selection table", Duration::from_secs(1), criterion_selection),
        (2, "CF algebra", Duration::from_secs(5), criterion_cf_algebra),
        (3, "window laws", Duration::from_secs(30), criterion_window_laws),
        (
            4,
            "outlier mechanics",
            Duration::from_secs(30),
            criterion_outlier_mechanics,
        ),
        (
            5,
            "migration conservation",
            Duration::from_secs(60),
            criterion_migration,
        ),
        (
            6,
            "detection responsiveness",
            Duration::from_secs(60),
            criterion_detection,
        ),
        (
            7,
            "self-optimizing beats static on ODS",
            Duration::from_secs(300),
            criterion_motivation,
        ),
        (
            8,
            "efficiency throughput >= 2x accuracy",
            Duration::from_secs(120),
            criterion_throughput,
        ),
        (9, "purity oracle", Duration::from_secs(5), criterion_purity_oracle),
        (10, "pipeline integrity", Duration::from_secs(120), criterion_pipeline),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut results: BTreeMap<u32, bool> = BTreeMap::new();
    panic::set_hook(Box::new(|_| {}));
    for (id, name, budget, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = outcome.pass && in_time;
        println!(
            "criterion {id:>2} {}: {name} [{:.2}s of {}s{}] {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" },
            outcome.detail
        );
        results.insert(id, pass);
    }
    let failed: Vec<u32> = results.iter().filter(|(_, &p)| !p).map(|(&id, _)| id).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" ({failed:?})")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
