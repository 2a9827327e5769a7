//! Micro-clusters (CluStream style): a bounded set of clustering features
//! with timestamp moments.

use super::{Aliases, ClusterAssignment, DecayClock, IdGen, Summary};
use crate::error::{check_dim, Error, Result};
use crate::types::{
    squared_distance, ClusterFeature, ClusterId, ClusterSnapshot, Decay, StructureKind, Timestamp, WEIGHT_EPS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct MicroCluster {
    pub id: ClusterId,
    pub cf: ClusterFeature,
}

#[derive(Debug, Clone)]
pub struct MicroClusters {
    dim: usize,
    capacity: usize,
    boundary_factor: f64,
    /// Micro-clusters whose mean timestamp is older than this many ticks may
    /// be deleted on overflow.
    horizon: f64,
    mcs: Vec<MicroCluster>,
    ids: IdGen,
    aliases: Aliases,
    clock: DecayClock,
    now: Timestamp,
}

impl MicroClusters {
    pub fn new(dim: usize, capacity: usize, boundary_factor: f64, horizon: f64) -> Self {
        MicroClusters {
            dim,
            capacity: capacity.max(2),
            boundary_factor,
            horizon,
            mcs: Vec::new(),
            ids: IdGen::default(),
            aliases: Aliases::default(),
            clock: DecayClock::default(),
            now: 0,
        }
    }

    /// Micro-clusters older than this many ticks may be deleted to make room.
    pub fn set_horizon(&mut self, horizon: f64) {
        self.horizon = horizon;
    }

    pub fn micro_clusters(&self) -> &[MicroCluster] {
        &self.mcs
    }

    fn nearest(&self, x: &[f64], skip: Option<usize>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, mc) in self.mcs.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            let d = squared_distance(&mc.cf.centroid(), x);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, d)| (i, d.sqrt()))
    }

    /// Maximum absorption distance of micro-cluster `i`: a multiple of its
    /// RMS radius, or the distance to its closest neighbour when the radius
    /// is degenerate.
    pub fn boundary(&self, i: usize) -> f64 {
        let mc = &self.mcs[i];
        let r = mc.cf.radius();
        if r > 0.0 {
            return self.boundary_factor * r;
        }
        let c = mc.cf.centroid();
        self.nearest(&c, Some(i)).map(|(_, d)| d).unwrap_or(0.0)
    }

    /// Keeps the count within capacity: delete the stalest micro-cluster if
    /// it fell behind the horizon, otherwise merge the closest pair.
    fn enforce_capacity(&mut self) {
        while self.mcs.len() > self.capacity {
            let (stale, stamp) = self
                .mcs
                .iter()
                .enumerate()
                .map(|(i, m)| (i, m.cf.mean_timestamp()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            if (self.now as f64) - stamp > self.horizon {
                self.mcs.swap_remove(stale);
                continue;
            }
            let centroids: Vec<Vec<f64>> = self.mcs.iter().map(|m| m.cf.centroid()).collect();
            let (mut a, mut b, mut best) = (0, 1, f64::INFINITY);
            for i in 0..centroids.len() {
                for j in i + 1..centroids.len() {
                    let d = squared_distance(&centroids[i], &centroids[j]);
                    if d < best {
                        best = d;
                        a = i;
                        b = j;
                    }
                }
            }
            let gone = self.mcs.swap_remove(b);
            // b > a, so swap_remove(b) never moves a
            self.mcs[a].cf.absorb(&gone.cf).expect("uniform dimension");
            self.aliases.link(gone.id, self.mcs[a].id);
        }
    }

    fn position(&self, id: ClusterId) -> Option<usize> {
        self.mcs.iter().position(|m| m.id == id)
    }
}

impl Summary for MicroClusters {
    fn kind(&self) -> StructureKind {
        StructureKind::MCs
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn insert_cf(&mut self, cf: ClusterFeature) -> Result<ClusterAssignment> {
        check_dim(self.dim, cf.dim())?;
        self.now = self.now.max(cf.last_update);
        let x = cf.centroid();
        if let Some((i, d)) = self.nearest(&x, None) {
            if d <= self.boundary(i) {
                self.mcs[i].cf.absorb(&cf)?;
                return Ok(ClusterAssignment::partitional(self.mcs[i].id));
            }
        }
        let id = self.ids.next();
        self.mcs.push(MicroCluster { id, cf });
        self.enforce_capacity();
        Ok(ClusterAssignment::partitional(self.aliases.resolve(id)))
    }

    fn snapshot(&self) -> ClusterSnapshot {
        ClusterSnapshot::new(self.mcs.iter().map(|m| m.cf.to_center()).collect())
    }

    fn clusters(&self) -> Vec<(ClusterId, ClusterFeature)> {
        self.mcs.iter().map(|m| (m.id, m.cf.clone())).collect()
    }

    fn nearest_distance(&self, x: &[f64]) -> Option<f64> {
        self.nearest(x, None).map(|(_, d)| d)
    }

    fn decay_all(&mut self, now: Timestamp, decay: &Decay) {
        self.now = self.now.max(now);
        let Some(factor) = self.clock.advance(now, decay) else {
            return;
        };
        for m in &mut self.mcs {
            m.cf.scale(factor);
        }
        self.mcs.retain(|m| m.cf.n >= WEIGHT_EPS);
    }

    fn remove_cluster(&mut self, id: ClusterId) -> Result<ClusterFeature> {
        let i = self.position(id).ok_or(Error::ClusterNotFound(id))?;
        Ok(self.mcs.swap_remove(i).cf)
    }

    fn subtract(&mut self, id: ClusterId, cf: &ClusterFeature) -> Result<bool> {
        check_dim(self.dim, cf.dim())?;
        let id = self.aliases.resolve(id);
        let Some(i) = self.position(id) else {
            return Ok(false);
        };
        self.mcs[i].cf.subtract(cf)?;
        if self.mcs[i].cf.n <= WEIGHT_EPS {
            self.mcs.swap_remove(i);
        }
        Ok(true)
    }

    fn clear(&mut self) {
        *self = MicroClusters::new(self.dim, self.capacity, self.boundary_factor, self.horizon);
    }

    fn total_weight(&self) -> f64 {
        self.mcs.iter().map(|m| m.cf.n).sum()
    }

    fn len(&self) -> usize {
        self.mcs.len()
    }
}
