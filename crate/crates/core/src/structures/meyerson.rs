//! Online facility-location sketch (Meyerson) with a capacity bound.
//!
//! Centers never move: an absorbed point adds weight to its nearest center.
//! A point opens a new center with probability `min(1, w·d²/f)`. When the
//! center count exceeds `K·⌈log₂(1+seen)⌉ + K` the sketch is rebuilt from its
//! own weighted centers with the facility cost doubled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{nearest_index, Aliases, ClusterAssignment, DecayClock, IdGen, Summary};
use crate::error::{check_dim, Error, Result};
use crate::types::{
    ClusterFeature, ClusterId, ClusterSnapshot, Decay, StructureKind, Timestamp, WeightedCenter, WEIGHT_EPS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SketchCenter {
    pub id: ClusterId,
    pub position: Vec<f64>,
    pub cf: ClusterFeature,
}

#[derive(Debug, Clone)]
pub struct MeyersonSketch {
    dim: usize,
    k: usize,
    initial_cost: f64,
    cost: f64,
    seed: u64,
    seen: u64,
    centers: Vec<SketchCenter>,
    rng: ChaCha8Rng,
    ids: IdGen,
    aliases: Aliases,
    clock: DecayClock,
    rebuilds: usize,
}

impl MeyersonSketch {
    pub fn new(dim: usize, k: usize, facility_cost: f64, seed: u64) -> Self {
        MeyersonSketch {
            dim,
            k: k.max(1),
            initial_cost: facility_cost,
            cost: facility_cost,
            seed,
            seen: 0,
            centers: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            ids: IdGen::default(),
            aliases: Aliases::default(),
            clock: DecayClock::default(),
            rebuilds: 0,
        }
    }

    pub fn facility_cost(&self) -> f64 {
        self.cost
    }

    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    pub fn centers(&self) -> &[SketchCenter] {
        &self.centers
    }

    pub fn capacity(&self) -> usize {
        let log = ((1 + self.seen) as f64).log2().ceil() as usize;
        self.k * log + self.k
    }

    fn nearest(&self, x: &[f64]) -> Option<(usize, f64)> {
        nearest_index(x, self.centers.iter().map(|c| c.position.as_slice()))
    }

    /// Places `cf` at `position`: returns the index of the center that now
    /// holds it and whether a new center was opened.
    fn place(&mut self, id: Option<ClusterId>, position: Vec<f64>, cf: ClusterFeature) -> (usize, bool) {
        if let Some((i, d2)) = self.nearest(&position) {
            let p = (cf.n * d2 / self.cost).min(1.0);
            let draw: f64 = self.rng.random();
            if draw >= p {
                self.centers[i].cf.absorb(&cf).expect("uniform dimension");
                return (i, false);
            }
        }
        let id = id.unwrap_or_else(|| self.ids.next());
        self.centers.push(SketchCenter { id, position, cf });
        (self.centers.len() - 1, true)
    }

    fn rebuild(&mut self) {
        while self.centers.len() > self.capacity() {
            self.cost *= 2.0;
            self.rebuilds += 1;
            let old = std::mem::take(&mut self.centers);
            for c in old {
                let (i, opened) = self.place(Some(c.id), c.position, c.cf);
                if !opened {
                    let to = self.centers[i].id;
                    self.aliases.link(c.id, to);
                }
            }
        }
    }

    fn position_of(&self, id: ClusterId) -> Option<usize> {
        self.centers.iter().position(|c| c.id == id)
    }
}

impl Summary for MeyersonSketch {
    fn kind(&self) -> StructureKind {
        StructureKind::AmSketch
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn insert_cf(&mut self, cf: ClusterFeature) -> Result<ClusterAssignment> {
        check_dim(self.dim, cf.dim())?;
        self.seen += 1;
        let x = cf.centroid();
        let (i, opened) = self.place(None, x, cf);
        let id = self.centers[i].id;
        if opened {
            self.rebuild();
        }
        Ok(ClusterAssignment::partitional(self.aliases.resolve(id)))
    }

    fn snapshot(&self) -> ClusterSnapshot {
        ClusterSnapshot::new(
            self.centers
                .iter()
                .map(|c| WeightedCenter {
                    centroid: c.position.clone(),
                    weight: c.cf.n,
                    last_update: c.cf.last_update,
                })
                .collect(),
        )
    }

    fn clusters(&self) -> Vec<(ClusterId, ClusterFeature)> {
        self.centers.iter().map(|c| (c.id, c.cf.clone())).collect()
    }

    fn nearest_distance(&self, x: &[f64]) -> Option<f64> {
        self.nearest(x).map(|(_, d2)| d2.sqrt())
    }

    fn decay_all(&mut self, now: Timestamp, decay: &Decay) {
        let Some(factor) = self.clock.advance(now, decay) else {
            return;
        };
        for c in &mut self.centers {
            c.cf.scale(factor);
        }
        self.centers.retain(|c| c.cf.n >= WEIGHT_EPS);
    }

    fn remove_cluster(&mut self, id: ClusterId) -> Result<ClusterFeature> {
        let i = self.position_of(id).ok_or(Error::ClusterNotFound(id))?;
        Ok(self.centers.remove(i).cf)
    }

    fn subtract(&mut self, id: ClusterId, cf: &ClusterFeature) -> Result<bool> {
        check_dim(self.dim, cf.dim())?;
        let id = self.aliases.resolve(id);
        let Some(i) = self.position_of(id) else {
            return Ok(false);
        };
        self.centers[i].cf.subtract(cf)?;
        if self.centers[i].cf.n <= WEIGHT_EPS {
            self.centers.remove(i);
        }
        Ok(true)
    }

    fn clear(&mut self) {
        *self = MeyersonSketch::new(self.dim, self.k, self.initial_cost, self.seed);
    }

    fn total_weight(&self) -> f64 {
        self.centers.iter().map(|c| c.cf.n).sum()
    }

    fn len(&self) -> usize {
        self.centers.len()
    }
}
