//! Summarizing data structures behind one interface.
//!
//! Every structure keeps temporal clusters as [`ClusterFeature`]s and can be
//! rebuilt from a [`ClusterSnapshot`], which is what makes migrating between
//! kinds possible. Hierarchical kinds (CFT, CoreT, DPT) descend a tree or
//! dependency chain on insert; partitional kinds (MCs, Grids, AMSketch) scan
//! or hash all of their clusters.
//!
//! Each structure may report two ids for an insert: `cluster` is the temporal
//! cluster the point belongs to (used for evaluation), `holder` is the unit
//! that stores its weight (used for later sliding-window subtraction). They
//! differ for DPT (cell vs. dependency root) and CoreT (pending slot vs.
//! nearest representative).

use std::collections::HashMap;
use std::fmt;

use crate::error::{check_dim, Result};
use crate::types::{
    squared_distance, ClusterFeature, ClusterId, ClusterSnapshot, Configuration, Decay, StreamPoint, StructureKind,
    Timestamp, WEIGHT_EPS,
};

mod cft;
mod coreset;
mod dpt;
mod grids;
mod mcs;
mod meyerson;

pub use cft::CfTree;
pub use coreset::{coreset_rebuild, CoresetItem, CoresetTree};
pub use dpt::{DependencyTree, DptCell};
pub use grids::{GridCell, Grids};
pub use mcs::MicroClusters;
pub use meyerson::MeyersonSketch;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertPath {
    Hierarchical { depth: usize },
    Partitional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub cluster: ClusterId,
    pub holder: ClusterId,
    pub path: InsertPath,
}

impl ClusterAssignment {
    pub(crate) fn partitional(id: ClusterId) -> Self {
        ClusterAssignment {
            cluster: id,
            holder: id,
            path: InsertPath::Partitional,
        }
    }
}

/// Uniform contract of the six summarizing structures.
pub trait Summary: Send + fmt::Debug {
    fn kind(&self) -> StructureKind;

    fn dim(&self) -> usize;

    /// Folds a whole clustering feature in, placing it as if it were a point
    /// of weight `cf.n` at its centroid.
    fn insert_cf(&mut self, cf: ClusterFeature) -> Result<ClusterAssignment>;

    fn insert(&mut self, p: &StreamPoint) -> Result<ClusterAssignment> {
        check_dim(self.dim(), p.dim())?;
        self.insert_cf(ClusterFeature::singleton(p))
    }

    /// All temporal clusters as weighted centers. Never mutates.
    fn snapshot(&self) -> ClusterSnapshot;

    /// The units the outlier layer inspects: every weight-holding cluster.
    fn clusters(&self) -> Vec<(ClusterId, ClusterFeature)>;

    /// Distance from `x` to the closest weight-holding cluster.
    fn nearest_distance(&self, x: &[f64]) -> Option<f64> {
        self.clusters()
            .iter()
            .map(|(_, cf)| squared_distance(&cf.centroid(), x))
            .min_by(f64::total_cmp)
            .map(f64::sqrt)
    }

    /// Exponential fading of every cluster up to `now`.
    fn decay_all(&mut self, now: Timestamp, decay: &Decay);

    fn remove_cluster(&mut self, id: ClusterId) -> Result<ClusterFeature>;

    /// Negative update used by the sliding window. Returns `Ok(false)` when
    /// the holder (after following merges) no longer exists.
    fn subtract(&mut self, id: ClusterId, cf: &ClusterFeature) -> Result<bool>;

    fn clear(&mut self);

    fn total_weight(&self) -> f64 {
        self.clusters().iter().map(|(_, cf)| cf.n).sum()
    }

    /// Number of weight-holding clusters.
    fn len(&self) -> usize {
        self.clusters().len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Forces any buffered raw input into the summary proper.
    fn flush(&mut self) {}
}

/// Creates an empty structure of the given kind.
pub fn build(kind: StructureKind, dim: usize, cfg: &Configuration) -> Result<Box<dyn Summary>> {
    cfg.structure.validate()?;
    let p = &cfg.structure;
    Ok(match kind {
        StructureKind::Cft => Box::new(CfTree::new(dim, p.cft_branching, p.leaf_threshold())),
        StructureKind::CoreT => Box::new(CoresetTree::new(dim, p.coreset_size, cfg.seed)?),
        StructureKind::Dpt => Box::new(DependencyTree::new(dim, p.join_radius(), p.dependency_cut())),
        StructureKind::MCs => Box::new(MicroClusters::new(
            dim,
            p.mc_capacity,
            p.mc_boundary_factor,
            cfg.thresholds.timer_threshold,
        )),
        StructureKind::Grids => Box::new(Grids::new(dim, p.cell_len)),
        StructureKind::AmSketch => {
            let k = cfg
                .k_hint
                .ok_or_else(|| crate::error::Error::config("AMSketch requires a cluster count (k_hint)"))?;
            Box::new(MeyersonSketch::new(dim, k, p.facility_cost(), cfg.seed))
        }
    })
}

/// Builds a structure of `kind` by inserting every snapshot center as one
/// weighted point stamped with its last update. Micro-clusters only merge
/// while loading, so no weight is lost to the deletion rule.
pub fn init_from_snapshot(
    kind: StructureKind,
    dim: usize,
    snap: &ClusterSnapshot,
    cfg: &Configuration,
) -> Result<Box<dyn Summary>> {
    for c in &snap.centers {
        check_dim(dim, c.centroid.len())?;
    }
    let load = |s: &mut dyn Summary| -> Result<()> {
        for c in &snap.centers {
            if c.weight > WEIGHT_EPS {
                s.insert_cf(c.to_cf())?;
            }
        }
        Ok(())
    };
    if kind == StructureKind::MCs {
        cfg.structure.validate()?;
        let p = &cfg.structure;
        let mut s = MicroClusters::new(dim, p.mc_capacity, p.mc_boundary_factor, f64::INFINITY);
        load(&mut s)?;
        s.set_horizon(cfg.thresholds.timer_threshold);
        return Ok(Box::new(s));
    }
    let mut s = build(kind, dim, cfg)?;
    load(s.as_mut())?;
    Ok(s)
}

/// Monotone id source for clusters within one structure.
#[derive(Debug, Clone, Default)]
pub(crate) struct IdGen(ClusterId);

impl IdGen {
    pub(crate) fn next(&mut self) -> ClusterId {
        let id = self.0;
        self.0 += 1;
        id
    }
}

/// Records where the weight of a merged-away cluster went.
#[derive(Debug, Clone, Default)]
pub(crate) struct Aliases(HashMap<ClusterId, ClusterId>);

impl Aliases {
    pub(crate) fn link(&mut self, from: ClusterId, to: ClusterId) {
        if from != to {
            self.0.insert(from, to);
        }
    }

    pub(crate) fn resolve(&self, mut id: ClusterId) -> ClusterId {
        while let Some(&next) = self.0.get(&id) {
            id = next;
        }
        id
    }
}

/// Global decay clock shared by all clusters of a structure. Every cluster
/// is faded at once, so a single "decayed up to" timestamp suffices.
#[derive(Debug, Clone, Default)]
pub(crate) struct DecayClock(Option<Timestamp>);

impl DecayClock {
    /// Returns the factor to apply to every cluster, if any.
    pub(crate) fn advance(&mut self, now: Timestamp, decay: &Decay) -> Option<f64> {
        let prev = self.0.replace(now.max(self.0.unwrap_or(now)))?;
        if now <= prev {
            return None;
        }
        Some(decay.factor((now - prev) as f64))
    }
}

/// Index and squared distance of the closest of `centers` to `x`.
pub(crate) fn nearest_index<'a, I>(x: &[f64], centers: I) -> Option<(usize, f64)>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in centers.into_iter().enumerate() {
        let d = squared_distance(x, c);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best
}
