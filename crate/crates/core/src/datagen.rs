//! Synthetic workloads and the CSV stream format.
//!
//! * EDS: a Gaussian mixture whose components evolve (merge, split, appear,
//!   disappear, drift) at a rate that rises over five stages.
//! * ODS: a static mixture with a growing share of uniform outliers; the
//!   second half is outliers only.
//! * Dim: 50-class mixtures, one segment per dimensionality.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{squared_distance, StreamPoint, OUTLIER_LABEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Merge,
    Split,
    Appear,
    Disappear,
    Drift,
}

impl EventKind {
    pub const ALL: [EventKind; 5] = [
        EventKind::Merge,
        EventKind::Split,
        EventKind::Appear,
        EventKind::Disappear,
        EventKind::Drift,
    ];
}

/// One ground-truth evolution event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionEvent {
    /// Index of the first point generated after the event.
    pub offset: u64,
    pub stage: usize,
    pub kind: EventKind,
    /// Labels of the components involved; for merges the survivor first,
    /// for splits the original first.
    pub labels: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GeneratedStream {
    pub points: Vec<StreamPoint>,
    pub events: Vec<EvolutionEvent>,
    /// Offsets where a stage (EDS, ODS) or segment (Dim) begins.
    pub boundaries: Vec<u64>,
}

impl GeneratedStream {
    pub fn into_source(self) -> impl Iterator<Item = Result<StreamPoint>> + Send {
        self.points.into_iter().map(Ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdsConfig {
    pub points: usize,
    pub dim: usize,
    pub clusters: usize,
    pub seed: u64,
    /// Event period of each stage; stages have equal length.
    pub periods: Vec<usize>,
    pub sigma: f64,
    /// Means are drawn from `[0, extent]^dim`.
    pub extent: f64,
}

impl Default for EdsConfig {
    fn default() -> Self {
        EdsConfig {
            points: 50_000,
            dim: 2,
            clusters: 5,
            seed: 0,
            periods: vec![5000, 2500, 2000, 1000, 500],
            sigma: 2.0,
            extent: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdsConfig {
    pub points: usize,
    pub dim: usize,
    pub clusters: usize,
    pub seed: u64,
    /// Outlier fraction per stage; stages cover a quarter, a quarter and
    /// the second half of the stream.
    pub fractions: [f64; 3],
    pub sigma: f64,
    pub extent: f64,
    /// The outlier box is the mixture region's ±3σ bounding box scaled by
    /// this factor around its center.
    pub box_inflation: f64,
}

impl Default for OdsConfig {
    fn default() -> Self {
        OdsConfig {
            points: 30_000,
            dim: 2,
            clusters: 5,
            seed: 0,
            fractions: [0.05, 0.25, 1.0],
            sigma: 2.0,
            extent: 100.0,
            box_inflation: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimConfig {
    pub dims: Vec<usize>,
    pub points_per_segment: usize,
    pub classes: usize,
    pub seed: u64,
    pub sigma: f64,
    pub extent: f64,
    /// Minimum distance between class means, in units of sigma.
    pub separation: f64,
}

impl Default for DimConfig {
    fn default() -> Self {
        DimConfig {
            dims: vec![20, 40, 60, 80, 100],
            points_per_segment: 10_000,
            classes: 50,
            seed: 0,
            sigma: 2.0,
            extent: 100.0,
            separation: 6.0,
        }
    }
}

#[derive(Debug, Clone)]
struct Component {
    label: i64,
    mean: Vec<f64>,
}

fn uniform_point(rng: &mut ChaCha8Rng, dim: usize, extent: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(0.0..=extent)).collect()
}

/// Draws a mean at least `min_sep` away from `others`, falling back to the
/// best of many tries.
fn place_mean(rng: &mut ChaCha8Rng, others: &[Vec<f64>], dim: usize, extent: f64, min_sep: f64) -> Vec<f64> {
    let mut best = (uniform_point(rng, dim, extent), -1.0);
    for _ in 0..1000 {
        let cand = uniform_point(rng, dim, extent);
        let gap = others
            .iter()
            .map(|o| squared_distance(o, &cand).sqrt())
            .fold(f64::INFINITY, f64::min);
        if gap >= min_sep {
            return cand;
        }
        if gap > best.1 {
            best = (cand, gap);
        }
    }
    best.0
}

fn place_means(rng: &mut ChaCha8Rng, n: usize, dim: usize, extent: f64, min_sep: f64) -> Vec<Vec<f64>> {
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let m = place_mean(rng, &means, dim, extent, min_sep);
        means.push(m);
    }
    means
}

fn gaussian_point(rng: &mut ChaCha8Rng, mean: &[f64], sigma: f64) -> Vec<f64> {
    mean.iter()
        .map(|m| {
            let z: f64 = StandardNormal.sample(rng);
            m + sigma * z
        })
        .collect()
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn check_common(points: usize, dim: usize, clusters: usize, sigma: f64) -> Result<()> {
    if points < 1 {
        return Err(Error::config("a generated stream needs at least one point"));
    }
    if dim < 1 || clusters < 1 {
        return Err(Error::config("dimension and cluster count must be at least 1"));
    }
    if !(sigma > 0.0) {
        return Err(Error::config("sigma must be positive"));
    }
    Ok(())
}

/// Evolving-cluster stream. Stage `i` fires an event every `periods[i]`
/// points counted from the stage start, `⌊stage_len / periods[i]⌋` in total.
pub fn gen_eds(cfg: &EdsConfig) -> Result<GeneratedStream> {
    check_common(cfg.points, cfg.dim, cfg.clusters, cfg.sigma)?;
    if cfg.periods.is_empty() || cfg.periods.contains(&0) {
        return Err(Error::config("EDS needs at least one stage with a positive period"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let min_sep = 6.0 * cfg.sigma;
    let mut live: Vec<Component> = place_means(&mut rng, cfg.clusters, cfg.dim, cfg.extent, min_sep)
        .into_iter()
        .enumerate()
        .map(|(i, mean)| Component { label: i as i64, mean })
        .collect();
    let mut next_label = cfg.clusters as i64;
    let max_live = 3 * cfg.clusters.max(1);

    let stages = cfg.periods.len();
    let base = cfg.points / stages;
    let mut out = GeneratedStream::default();
    let mut schedule: Vec<(u64, usize)> = Vec::new();
    let mut start = 0usize;
    for (s, &period) in cfg.periods.iter().enumerate() {
        let len = if s + 1 == stages { cfg.points - start } else { base };
        out.boundaries.push(start as u64);
        for k in 1..=len / period {
            schedule.push(((start + k * period) as u64, s));
        }
        start += len;
    }

    let mut pending = schedule.into_iter().peekable();
    let mut fire =
        |live: &mut Vec<Component>, rng: &mut ChaCha8Rng, offset: u64, stage: usize, out: &mut GeneratedStream| loop {
            let kind = *EventKind::ALL.choose(rng).expect("non-empty");
            let labels = match kind {
                EventKind::Merge if live.len() >= 2 => {
                    let a = rng.random_range(0..live.len());
                    let mut b = rng.random_range(0..live.len() - 1);
                    if b >= a {
                        b += 1;
                    }
                    let gone = live[b].clone();
                    let mid: Vec<f64> = live[a]
                        .mean
                        .iter()
                        .zip(&gone.mean)
                        .map(|(x, y)| (x + y) / 2.0)
                        .collect();
                    live[a].mean = mid;
                    let labels = vec![live[a].label, gone.label];
                    live.remove(b);
                    labels
                }
                EventKind::Split if live.len() < max_live => {
                    let a = rng.random_range(0..live.len());
                    let u = random_direction(rng, cfg.dim);
                    let off = 4.0 * cfg.sigma;
                    let twin: Vec<f64> = live[a].mean.iter().zip(&u).map(|(m, d)| m + off * d).collect();
                    for (m, d) in live[a].mean.iter_mut().zip(&u) {
                        *m -= off * d;
                    }
                    let labels = vec![live[a].label, next_label];
                    live.push(Component {
                        label: next_label,
                        mean: twin,
                    });
                    next_label += 1;
                    labels
                }
                EventKind::Appear if live.len() < max_live => {
                    let others: Vec<Vec<f64>> = live.iter().map(|c| c.mean.clone()).collect();
                    let mean = place_mean(rng, &others, cfg.dim, cfg.extent, min_sep);
                    live.push(Component {
                        label: next_label,
                        mean,
                    });
                    next_label += 1;
                    vec![next_label - 1]
                }
                EventKind::Disappear if live.len() >= 2 => {
                    let a = rng.random_range(0..live.len());
                    vec![live.remove(a).label]
                }
                EventKind::Drift => {
                    let a = rng.random_range(0..live.len());
                    let u = random_direction(rng, cfg.dim);
                    for (m, d) in live[a].mean.iter_mut().zip(&u) {
                        *m = (*m + 3.0 * cfg.sigma * d).clamp(0.0, cfg.extent);
                    }
                    vec![live[a].label]
                }
                _ => continue,
            };
            out.events.push(EvolutionEvent {
                offset,
                stage,
                kind,
                labels,
            });
            return;
        };

    for i in 0..cfg.points as u64 {
        while let Some(&(offset, stage)) = pending.peek() {
            if offset > i {
                break;
            }
            pending.next();
            fire(&mut live, &mut rng, offset, stage, &mut out);
        }
        let c = &live[rng.random_range(0..live.len())];
        let x = gaussian_point(&mut rng, &c.mean, cfg.sigma);
        out.points.push(StreamPoint::new(i, x).with_label(c.label));
    }
    for (offset, stage) in pending {
        fire(&mut live, &mut rng, offset, stage, &mut out);
    }
    Ok(out)
}

/// Stage lengths of an ODS stream of `n` points.
pub fn ods_stage_lengths(n: usize) -> [usize; 3] {
    let q = n / 4;
    [q, q, n - 2 * q]
}

/// Axis-aligned box the ODS outliers are drawn from: the region the mixture
/// lives in (`[0, extent]` per axis, padded by 3σ) scaled by `inflation`
/// around its center.
pub fn ods_outlier_box(dim: usize, extent: f64, sigma: f64, inflation: f64) -> Vec<(f64, f64)> {
    let (lo, hi) = (-3.0 * sigma, extent + 3.0 * sigma);
    let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0 * inflation);
    vec![(mid - half, mid + half); dim]
}

/// Outlier-evolving stream: inliers from a fixed mixture, outliers uniform
/// in an inflated bounding box with label −1.
pub fn gen_ods(cfg: &OdsConfig) -> Result<GeneratedStream> {
    check_common(cfg.points, cfg.dim, cfg.clusters, cfg.sigma)?;
    if cfg.fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::config("outlier fractions must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let means = place_means(&mut rng, cfg.clusters, cfg.dim, cfg.extent, 6.0 * cfg.sigma);
    let bounds = ods_outlier_box(cfg.dim, cfg.extent, cfg.sigma, cfg.box_inflation);
    let lens = ods_stage_lengths(cfg.points);
    let mut out = GeneratedStream::default();
    let mut i = 0u64;
    for (stage, &len) in lens.iter().enumerate() {
        out.boundaries.push(i);
        for _ in 0..len {
            let p = if rng.random::<f64>() < cfg.fractions[stage] {
                let x: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
                StreamPoint::new(i, x).with_label(OUTLIER_LABEL)
            } else {
                let c = rng.random_range(0..means.len());
                StreamPoint::new(i, gaussian_point(&mut rng, &means[c], cfg.sigma)).with_label(c as i64)
            };
            out.points.push(p);
            i += 1;
        }
    }
    Ok(out)
}

/// Class means for one Dim segment; fails if the separation cannot be met.
pub fn dim_means(rng: &mut ChaCha8Rng, cfg: &DimConfig, dim: usize) -> Result<Vec<Vec<f64>>> {
    let min_sep = cfg.separation * cfg.sigma;
    let means = place_means(rng, cfg.classes, dim, cfg.extent, min_sep);
    for i in 0..means.len() {
        for j in i + 1..means.len() {
            if squared_distance(&means[i], &means[j]).sqrt() < min_sep {
                return Err(Error::config(format!(
                    "cannot separate {} classes by {min_sep} in {dim} dimensions",
                    cfg.classes
                )));
            }
        }
    }
    Ok(means)
}

/// High-dimensional stream: one 50-class segment per entry of `dims`.
/// Labels restart per segment; `boundaries` marks every dimension change.
pub fn gen_dim(cfg: &DimConfig) -> Result<GeneratedStream> {
    if cfg.dims.is_empty() || cfg.dims.contains(&0) {
        return Err(Error::config("Dim needs at least one positive dimension"));
    }
    check_common(cfg.points_per_segment, cfg.dims[0], cfg.classes, cfg.sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = GeneratedStream::default();
    let mut i = 0u64;
    for &dim in &cfg.dims {
        let means = dim_means(&mut rng, cfg, dim)?;
        out.boundaries.push(i);
        let noise = Normal::new(0.0, cfg.sigma).map_err(|e| Error::config(e.to_string()))?;
        for _ in 0..cfg.points_per_segment {
            let c = rng.random_range(0..means.len());
            let x: Vec<f64> = means[c].iter().map(|m| m + noise.sample(&mut rng)).collect();
            out.points.push(StreamPoint::new(i, x).with_label(c as i64));
            i += 1;
        }
    }
    Ok(out)
}

/// Which column of a CSV file holds the class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelColumn {
    None,
    First,
    Last,
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(LabelColumn::None),
            "first" => Ok(LabelColumn::First),
            "last" => Ok(LabelColumn::Last),
            other => other
                .parse()
                .map(LabelColumn::Index)
                .map_err(|_| Error::config(format!("unknown label column '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    pub label: LabelColumn,
    pub delimiter: u8,
    /// Accept rows whose feature count differs from the first row.
    pub allow_mixed_dims: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label: LabelColumn::Last,
            delimiter: b',',
            allow_mixed_dims: false,
        }
    }
}

fn parse_label(field: &str, line: u64) -> Result<Option<i64>> {
    let f = field.trim();
    if f.is_empty() {
        return Ok(None);
    }
    if let Ok(v) = f.parse::<i64>() {
        return Ok(Some(v));
    }
    match f.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.is_finite() => Ok(Some(v as i64)),
        _ => Err(Error::MalformedRow {
            line,
            message: format!("label '{f}' is not an integer"),
        }),
    }
}

/// Lazily parsed CSV stream. A first row whose features do not parse is
/// taken as a header and skipped. Ids and timestamps are the data-row index.
/// Iteration stops after the first error.
pub struct CsvStream<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    opts: CsvOptions,
    row: usize,
    dim: Option<usize>,
    next_id: u64,
    failed: bool,
}

impl<R: Read> CsvStream<R> {
    pub fn new(reader: R, opts: &CsvOptions) -> Self {
        let records = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .delimiter(opts.delimiter)
            .from_reader(reader)
            .into_records();
        CsvStream {
            records,
            opts: *opts,
            row: 0,
            dim: None,
            next_id: 0,
            failed: false,
        }
    }

    /// Parses one record; `Ok(None)` means the row is skipped.
    fn parse(&mut self, record: csv::StringRecord) -> Result<Option<StreamPoint>> {
        let row = self.row;
        self.row += 1;
        let line = record.position().map_or(row as u64 + 1, |p| p.line());
        let fields: Vec<&str> = record.iter().collect();
        if fields.len() == 1 && fields[0].trim().is_empty() {
            return Ok(None);
        }
        let label_at = match self.opts.label {
            LabelColumn::None => None,
            LabelColumn::First => Some(0),
            LabelColumn::Last => Some(fields.len().saturating_sub(1)),
            LabelColumn::Index(i) => Some(i),
        };
        if let Some(i) = label_at {
            if i >= fields.len() {
                return Err(Error::MalformedRow {
                    line,
                    message: format!("no label column {i} in a row of {} fields", fields.len()),
                });
            }
        }
        let parsed: std::result::Result<Vec<f64>, _> = fields
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_at)
            .map(|(_, f)| f.trim().parse::<f64>())
            .collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if row == 0 => return Ok(None),
            Err(e) => {
                return Err(Error::MalformedRow {
                    line,
                    message: e.to_string(),
                })
            }
        };
        if values.is_empty() {
            return Err(Error::MalformedRow {
                line,
                message: "row has no feature columns".into(),
            });
        }
        match self.dim {
            None => self.dim = Some(values.len()),
            Some(d) if d != values.len() && !self.opts.allow_mixed_dims => {
                return Err(Error::MalformedRow {
                    line,
                    message: format!("expected {d} features, found {}", values.len()),
                })
            }
            Some(_) => {}
        }
        let label = match label_at {
            Some(i) => parse_label(fields[i], line)?,
            None => None,
        };
        let mut p = StreamPoint::new(self.next_id, values);
        p.label = label;
        self.next_id += 1;
        Ok(Some(p))
    }
}

impl<R: Read> Iterator for CsvStream<R> {
    type Item = Result<StreamPoint>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let parsed = match self.records.next()? {
                Ok(record) => self.parse(record),
                Err(e) => Err(e.into()),
            };
            match parsed {
                Ok(Some(p)) => return Some(Ok(p)),
                Ok(None) => continue,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

/// Reads a whole CSV stream; see [`CsvStream`].
pub fn read_csv<R: Read>(reader: R, opts: &CsvOptions) -> Result<Vec<StreamPoint>> {
    CsvStream::new(reader, opts).collect()
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Vec<StreamPoint>> {
    read_csv(File::open(path)?, opts)
}

/// Opens `path` as a lazily parsed stream.
pub fn open_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<CsvStream<File>> {
    Ok(CsvStream::new(File::open(path)?, opts))
}

/// Writes points in the dialect [`read_csv`] reads with the label last: a
/// header row, then one row per point with an empty label for unlabeled
/// points.
pub fn write_csv<W: Write>(writer: W, points: &[StreamPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let dim = points.iter().map(StreamPoint::dim).max().unwrap_or(0);
    let mut header: Vec<String> = (0..dim).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for p in points {
        let mut row: Vec<String> = p.values.iter().map(|v| v.to_string()).collect();
        row.push(p.label.map(|l| l.to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huge_period_means_static_mixture() {
        let cfg = EdsConfig {
            points: 2000,
            periods: vec![10_000; 5],
            ..EdsConfig::default()
        };
        let s = gen_eds(&cfg).unwrap();
        assert!(s.events.is_empty());
        assert_eq!(s.points.len(), 2000);
    }

    #[test]
    fn eds_event_counts_follow_schedule() {
        let cfg = EdsConfig::default();
        let s = gen_eds(&cfg).unwrap();
        let len = cfg.points / cfg.periods.len();
        for (stage, &period) in cfg.periods.iter().enumerate() {
            let n = s.events.iter().filter(|e| e.stage == stage).count();
            assert_eq!(n, len / period);
            for e in s.events.iter().filter(|e| e.stage == stage) {
                assert_eq!((e.offset as usize - stage * len) % period, 0);
            }
        }
    }

    #[test]
    fn ods_second_half_is_all_outliers() {
        let s = gen_ods(&OdsConfig {
            points: 4000,
            ..OdsConfig::default()
        })
        .unwrap();
        assert!(s.points[2000..].iter().all(|p| p.label == Some(OUTLIER_LABEL)));
        assert_eq!(s.boundaries, vec![0, 1000, 2000]);
    }

    #[test]
    fn ods_without_outliers_has_no_outlier_labels() {
        let s = gen_ods(&OdsConfig {
            points: 3000,
            fractions: [0.0; 3],
            ..OdsConfig::default()
        })
        .unwrap();
        assert!(s.points.iter().all(|p| p.label != Some(OUTLIER_LABEL)));
    }

    #[test]
    fn dim_segment_has_fifty_classes() {
        let cfg = DimConfig {
            dims: vec![20],
            points_per_segment: 5000,
            ..DimConfig::default()
        };
        let s = gen_dim(&cfg).unwrap();
        let labels: std::collections::BTreeSet<i64> = s.points.iter().filter_map(|p| p.label).collect();
        assert_eq!(labels.len(), 50);
        assert!(s.points.iter().all(|p| p.dim() == 20));
    }

    #[test]
    fn csv_basics() {
        let pts = read_csv("1.0,2.0,0\n3.0,4.0,1\n".as_bytes(), &CsvOptions::default()).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!((pts[0].id, pts[1].id), (0, 1));
        assert_eq!(pts[1].values, vec![3.0, 4.0]);
        assert_eq!(pts[1].label, Some(1));
        assert!(read_csv("".as_bytes(), &CsvOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn csv_reports_line_of_bad_row() {
        let err = read_csv("a,b,label\n1,2,0\n1,x,0\n".as_bytes(), &CsvOptions::default()).unwrap_err();
        match err {
            Error::MalformedRow { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_mixed_dimensions_unless_allowed() {
        let text = "1,2,0\n1,2,3,0\n";
        assert!(read_csv(text.as_bytes(), &CsvOptions::default()).is_err());
        let opts = CsvOptions {
            allow_mixed_dims: true,
            ..CsvOptions::default()
        };
        assert_eq!(read_csv(text.as_bytes(), &opts).unwrap()[1].dim(), 3);
    }
}
