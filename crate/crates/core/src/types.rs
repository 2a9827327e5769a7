//! Shared domain types: stream points, clustering features, snapshots and the
//! configuration surface every other module consumes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Identifier of a temporal cluster inside one structure instance.
pub type ClusterId = u64;

/// Count-based arrival index.
pub type Timestamp = u64;

/// Reserved cluster/label value for points judged to be outliers.
pub const OUTLIER_LABEL: i64 = -1;

/// Tolerance under which a squared radius is treated as zero.
pub const RADIUS_EPS: f64 = 1e-9;

/// Weights below this are considered numerically dead.
pub const WEIGHT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamPoint {
    pub id: u64,
    pub timestamp: Timestamp,
    pub values: Vec<f64>,
    pub label: Option<i64>,
    pub weight: f64,
}

impl StreamPoint {
    pub fn new(id: u64, values: Vec<f64>) -> Self {
        StreamPoint {
            id,
            timestamp: id,
            values,
            label: None,
            weight: 1.0,
        }
    }

    pub fn with_label(mut self, label: i64) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_timestamp(mut self, timestamp: Timestamp) -> Self {
        self.timestamp = timestamp;
        self
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Additive cluster summary: weight, linear sum, scalar squared sum and
/// timestamp moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFeature {
    pub n: f64,
    pub ls: Vec<f64>,
    pub ss: f64,
    pub t_sum: f64,
    pub t_sq: f64,
    pub last_update: Timestamp,
}

impl ClusterFeature {
    pub fn empty(dim: usize) -> Self {
        ClusterFeature {
            n: 0.0,
            ls: vec![0.0; dim],
            ss: 0.0,
            t_sum: 0.0,
            t_sq: 0.0,
            last_update: 0,
        }
    }

    /// A cluster holding `weight` copies of `x` observed at `t`.
    pub fn from_weighted(x: &[f64], weight: f64, t: Timestamp) -> Self {
        let tf = t as f64;
        ClusterFeature {
            n: weight,
            ls: x.iter().map(|v| v * weight).collect(),
            ss: weight * norm_sq(x),
            t_sum: weight * tf,
            t_sq: weight * tf * tf,
            last_update: t,
        }
    }

    pub fn singleton(p: &StreamPoint) -> Self {
        Self::from_weighted(&p.values, p.weight, p.timestamp)
    }

    pub fn dim(&self) -> usize {
        self.ls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n <= WEIGHT_EPS
    }

    pub fn centroid(&self) -> Vec<f64> {
        if self.n <= 0.0 {
            return vec![0.0; self.dim()];
        }
        self.ls.iter().map(|v| v / self.n).collect()
    }

    /// Mean squared distance of the summarized points to the centroid,
    /// clamped at zero.
    pub fn radius_sq(&self) -> f64 {
        if self.n <= 0.0 {
            return 0.0;
        }
        let r = self.ss / self.n - norm_sq(&self.ls) / (self.n * self.n);
        if r < RADIUS_EPS {
            0.0
        } else {
            r
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius_sq().sqrt()
    }

    pub fn mean_timestamp(&self) -> f64 {
        if self.n <= 0.0 {
            0.0
        } else {
            self.t_sum / self.n
        }
    }

    /// In-place additive merge.
    pub fn absorb(&mut self, other: &ClusterFeature) -> Result<()> {
        check_dim(self.dim(), other.dim())?;
        self.n += other.n;
        for (a, b) in self.ls.iter_mut().zip(&other.ls) {
            *a += b;
        }
        self.ss += other.ss;
        self.t_sum += other.t_sum;
        self.t_sq += other.t_sq;
        self.last_update = self.last_update.max(other.last_update);
        Ok(())
    }

    /// In-place additive removal. `last_update` is left untouched.
    pub fn subtract(&mut self, other: &ClusterFeature) -> Result<()> {
        check_dim(self.dim(), other.dim())?;
        self.n -= other.n;
        for (a, b) in self.ls.iter_mut().zip(&other.ls) {
            *a -= b;
        }
        self.ss -= other.ss;
        self.t_sum -= other.t_sum;
        self.t_sq -= other.t_sq;
        Ok(())
    }

    pub fn insert(&mut self, p: &StreamPoint) -> Result<()> {
        self.absorb(&ClusterFeature::singleton(p))
    }

    /// Multiplies every additive field by `factor` (exponential decay).
    pub fn scale(&mut self, factor: f64) {
        self.n *= factor;
        for v in &mut self.ls {
            *v *= factor;
        }
        self.ss *= factor;
        self.t_sum *= factor;
        self.t_sq *= factor;
    }

    pub fn to_center(&self) -> WeightedCenter {
        WeightedCenter {
            centroid: self.centroid(),
            weight: self.n,
            last_update: self.last_update,
        }
    }
}

/// Componentwise sum of two clustering features.
pub fn cf_merge(a: &ClusterFeature, b: &ClusterFeature) -> Result<ClusterFeature> {
    let mut out = a.clone();
    out.absorb(b)?;
    Ok(out)
}

/// `cf` with one more point folded in.
pub fn cf_insert(cf: &ClusterFeature, p: &StreamPoint) -> Result<ClusterFeature> {
    cf_merge(cf, &ClusterFeature::singleton(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct StreamCharacteristics {
    pub high_dimension: bool,
    pub frequent_evolution: bool,
    pub many_outliers: bool,
}

impl StreamCharacteristics {
    /// All eight flag combinations, in bit order (high_dimension is bit 0).
    pub fn all() -> impl Iterator<Item = StreamCharacteristics> {
        (0u8..8).map(|bits| StreamCharacteristics {
            high_dimension: bits & 1 != 0,
            frequent_evolution: bits & 2 != 0,
            many_outliers: bits & 4 != 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decay {
    /// Initial weight multiplier for points entering a damped window.
    pub alpha: f64,
    /// Decay rate; weights fade as `2^(-lambda * dt)`.
    pub lambda: f64,
}

impl Decay {
    pub fn factor(&self, dt: f64) -> f64 {
        (2f64).powf(-self.lambda * dt)
    }
}

impl Default for Decay {
    fn default() -> Self {
        Decay {
            alpha: 1.0,
            lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Dimensions above which a point counts as high-dimensional.
    pub dim_threshold: usize,
    /// Distance beyond which a point is far from every known center.
    pub dist_threshold: f64,
    /// Separate distance for the outlier mechanism; `dist_threshold` when unset.
    pub outlier_distance: Option<f64>,
    pub variance_threshold: f64,
    pub queue_capacity: usize,
    pub density_threshold: f64,
    pub timer_threshold: f64,
    pub landmark_period: usize,
    pub sliding_size: usize,
    pub decay: Decay,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            dim_threshold: 30,
            dist_threshold: 100.0,
            outlier_distance: None,
            variance_threshold: 1000.0,
            queue_capacity: 10_000,
            density_threshold: 4.0,
            timer_threshold: 3000.0,
            landmark_period: 5000,
            sliding_size: 5000,
            decay: Decay::default(),
        }
    }
}

impl Thresholds {
    pub fn outlier_delta(&self) -> f64 {
        self.outlier_distance.unwrap_or(self.dist_threshold)
    }

    pub fn validate(&self) -> Result<()> {
        if self.queue_capacity < 2 {
            return Err(Error::config("queue_capacity must be at least 2"));
        }
        if self.sliding_size < 1 {
            return Err(Error::config("sliding window size must be at least 1"));
        }
        if self.landmark_period < 1 {
            return Err(Error::config("landmark period must be at least 1"));
        }
        if !(self.decay.lambda > 0.0) || !(self.decay.alpha > 0.0) {
            return Err(Error::config("decay alpha and lambda must be positive"));
        }
        if !(self.dist_threshold > 0.0) || !(self.outlier_delta() > 0.0) {
            return Err(Error::config("distance thresholds must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    Accuracy,
    Efficiency,
    Balance,
}

macro_rules! token_enum {
    ($name:ident { $($variant:ident => $tok:literal $(| $alias:literal)*),+ $(,)? }) => {
        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn token(&self) -> &'static str {
                match self {
                    $($name::$variant => $tok),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($tok $(| $alias)* => Ok($name::$variant),)+
                    other => Err(Error::config(format!(
                        "unknown {} '{}'", stringify!($name), other
                    ))),
                }
            }
        }
    };
}

token_enum!(Objective {
    Accuracy => "accuracy",
    Efficiency => "efficiency",
    Balance => "balance",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StructureKind {
    Cft,
    CoreT,
    Dpt,
    MCs,
    Grids,
    AmSketch,
}

impl StructureKind {
    pub fn is_hierarchical(&self) -> bool {
        matches!(self, StructureKind::Cft | StructureKind::CoreT | StructureKind::Dpt)
    }
}

token_enum!(StructureKind {
    Cft => "cft",
    CoreT => "coret",
    Dpt => "dpt",
    MCs => "mcs",
    Grids => "grids",
    AmSketch => "amsketch",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WindowKind {
    Landmark,
    Sliding,
    Damped,
}

token_enum!(WindowKind {
    Landmark => "landmark",
    Sliding => "sliding",
    Damped => "damped",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutlierKind {
    None,
    Basic,
    Buffer,
    Timer,
    BufferTimer,
}

impl OutlierKind {
    pub fn is_buffered(&self) -> bool {
        matches!(self, OutlierKind::Buffer | OutlierKind::BufferTimer)
    }

    pub fn uses_timer(&self) -> bool {
        matches!(self, OutlierKind::Timer | OutlierKind::BufferTimer)
    }
}

token_enum!(OutlierKind {
    None => "none",
    Basic => "basic",
    Buffer => "buffer",
    Timer => "timer",
    BufferTimer => "buffertimer" | "buffer_timer" | "buffer-timer",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RefineKind {
    None,
    OneShot,
    Incremental,
}

token_enum!(RefineKind {
    None => "none",
    OneShot => "oneshot" | "one-shot" | "one_shot",
    Incremental => "incremental",
});

/// The four design choices that together define a clustering pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Kinds {
    pub structure: StructureKind,
    pub window: WindowKind,
    pub outlier: OutlierKind,
    pub refine: RefineKind,
}

impl Kinds {
    pub fn new(structure: StructureKind, window: WindowKind, outlier: OutlierKind, refine: RefineKind) -> Self {
        Kinds {
            structure,
            window,
            outlier,
            refine,
        }
    }
}

impl fmt::Display for Kinds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.structure, self.window, self.outlier, self.refine)
    }
}

impl FromStr for Kinds {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::config(format!(
                "expected structure,window,outlier,refine but got '{s}'"
            )));
        }
        Ok(Kinds {
            structure: parts[0].parse()?,
            window: parts[1].parse()?,
            outlier: parts[2].parse()?,
            refine: parts[3].parse()?,
        })
    }
}

/// Per-structure tuning knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureParams {
    /// Grid cell side length; also the base scale for the other structures.
    pub cell_len: f64,
    pub cft_branching: usize,
    /// CFT leaf radius threshold; `2 * cell_len` when unset.
    pub cft_threshold: Option<f64>,
    pub mc_boundary_factor: f64,
    pub mc_capacity: usize,
    /// DPT join radius; the CFT leaf threshold when unset.
    pub dpt_radius: Option<f64>,
    /// DPT dependency cut; `4 * dpt_radius` when unset.
    pub dpt_cut: Option<f64>,
    pub coreset_size: usize,
}

impl Default for StructureParams {
    fn default() -> Self {
        StructureParams {
            cell_len: 1.0,
            cft_branching: 8,
            cft_threshold: None,
            mc_boundary_factor: 2.0,
            mc_capacity: 500,
            dpt_radius: None,
            dpt_cut: None,
            coreset_size: 200,
        }
    }
}

impl StructureParams {
    pub fn leaf_threshold(&self) -> f64 {
        self.cft_threshold.unwrap_or(2.0 * self.cell_len)
    }

    pub fn join_radius(&self) -> f64 {
        self.dpt_radius.unwrap_or_else(|| self.leaf_threshold())
    }

    pub fn dependency_cut(&self) -> f64 {
        self.dpt_cut.unwrap_or_else(|| 4.0 * self.join_radius())
    }

    pub fn facility_cost(&self) -> f64 {
        let r = self.join_radius();
        r * r
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_len > 0.0) {
            return Err(Error::config("cell_len must be positive"));
        }
        if self.cft_branching < 2 {
            return Err(Error::config("CFT branching factor must be at least 2"));
        }
        if !(self.leaf_threshold() >= 0.0) {
            return Err(Error::config("CFT leaf threshold must be non-negative"));
        }
        if self.mc_capacity < 2 {
            return Err(Error::config("micro-cluster capacity must be at least 2"));
        }
        if !(self.join_radius() > 0.0) || !(self.dependency_cut() > 0.0) {
            return Err(Error::config("DPT radius and cut must be positive"));
        }
        if self.coreset_size < 1 {
            return Err(Error::config("coreset size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierParams {
    /// Points between two regular checks.
    pub check_period: usize,
    pub buffer_capacity: usize,
    /// Radius within which an outlier joins an existing buffer cluster;
    /// the CFT leaf threshold when unset.
    pub buffer_radius: Option<f64>,
}

impl Default for OutlierParams {
    fn default() -> Self {
        OutlierParams {
            check_period: 1000,
            buffer_capacity: 200,
            buffer_radius: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BatchAlgo {
    KMeans,
    Dbscan,
}

token_enum!(BatchAlgo {
    KMeans => "kmeans",
    Dbscan => "dbscan",
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    pub algo: BatchAlgo,
    /// Cluster count for KMeans; falls back to the run's `k_hint`, then
    /// `ceil(sqrt(#centers))`.
    pub k: Option<usize>,
    pub eps: f64,
    pub min_pts: f64,
    /// Points between incremental refinements; `queue_capacity` when unset.
    pub incremental_period: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for RefineParams {
    fn default() -> Self {
        RefineParams {
            algo: BatchAlgo::KMeans,
            k: None,
            eps: 4.0,
            min_pts: 4.0,
            incremental_period: None,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

/// An active pipeline: the four kinds plus every tunable that persists
/// across reconfigurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub kinds: Kinds,
    pub thresholds: Thresholds,
    pub structure: StructureParams,
    pub outlier: OutlierParams,
    pub refine: RefineParams,
    pub k_hint: Option<usize>,
    pub seed: u64,
}

impl Configuration {
    pub fn new(kinds: Kinds) -> Self {
        Configuration {
            kinds,
            thresholds: Thresholds::default(),
            structure: StructureParams::default(),
            outlier: OutlierParams::default(),
            refine: RefineParams::default(),
            k_hint: None,
            seed: 0,
        }
    }

    pub fn with_kinds(&self, kinds: Kinds) -> Self {
        Configuration { kinds, ..self.clone() }
    }

    pub fn incremental_period(&self) -> usize {
        self.refine.incremental_period.unwrap_or(self.thresholds.queue_capacity)
    }

    pub fn buffer_radius(&self) -> f64 {
        self.outlier
            .buffer_radius
            .unwrap_or_else(|| self.structure.leaf_threshold())
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        self.structure.validate()?;
        if self.kinds.structure == StructureKind::AmSketch && self.k_hint.is_none() {
            return Err(Error::config("AMSketch requires a cluster count (k_hint)"));
        }
        if self.k_hint == Some(0) || self.refine.k == Some(0) {
            return Err(Error::config("cluster count must be at least 1"));
        }
        if self.outlier.check_period < 1 {
            return Err(Error::config("outlier check period must be at least 1"));
        }
        if self.refine.algo == BatchAlgo::Dbscan && !(self.refine.eps > 0.0) {
            return Err(Error::config("DBSCAN eps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedCenter {
    pub centroid: Vec<f64>,
    pub weight: f64,
    pub last_update: Timestamp,
}

impl WeightedCenter {
    pub fn to_cf(&self) -> ClusterFeature {
        ClusterFeature::from_weighted(&self.centroid, self.weight, self.last_update)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterSnapshot {
    pub centers: Vec<WeightedCenter>,
    pub outliers: Option<Vec<WeightedCenter>>,
}

impl ClusterSnapshot {
    pub fn new(centers: Vec<WeightedCenter>) -> Self {
        ClusterSnapshot {
            centers,
            outliers: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.centers.iter().map(|c| c.weight).sum()
    }

    pub fn outlier_weight(&self) -> f64 {
        self.outliers
            .as_ref()
            .map(|o| o.iter().map(|c| c.weight).sum())
            .unwrap_or(0.0)
    }

    pub fn dim(&self) -> Option<usize> {
        self.centers.first().map(|c| c.centroid.len())
    }

    pub fn nearest_distance(&self, x: &[f64]) -> Option<f64> {
        self.centers
            .iter()
            .map(|c| squared_distance(&c.centroid, x))
            .min_by(f64::total_cmp)
            .map(f64::sqrt)
    }
}

/// Distance-based outlier test: far (strictly beyond `delta`) from every
/// center. An empty snapshot never flags a point.
pub fn outlier_distance_test(p: &StreamPoint, snapshot: &ClusterSnapshot, delta: f64) -> bool {
    match snapshot.nearest_distance(&p.values) {
        Some(d) => d > delta,
        None => false,
    }
}
