//! Density-peaks dependency tree.
//!
//! Points join the nearest cell within the join radius (measured from the
//! cell's fixed seed) or open a new cell. Every cell links to its nearest
//! strictly denser cell; cutting links longer than the dependency cut
//! splits the forest into clusters.

use std::collections::HashMap;

use super::{ClusterAssignment, DecayClock, IdGen, InsertPath, Summary};
use crate::error::{check_dim, Error, Result};
use crate::types::{
    distance, squared_distance, ClusterFeature, ClusterId, ClusterSnapshot, Decay, StructureKind, Timestamp, WEIGHT_EPS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct DptCell {
    pub id: ClusterId,
    pub seed: Vec<f64>,
    pub cf: ClusterFeature,
    /// Nearest strictly denser cell, `None` for density maxima.
    pub dep: Option<ClusterId>,
    pub dep_dist: f64,
}

impl DptCell {
    pub fn density(&self) -> f64 {
        self.cf.n
    }
}

#[derive(Debug, Clone)]
pub struct DependencyTree {
    dim: usize,
    radius: f64,
    cut: f64,
    cells: Vec<DptCell>,
    index: HashMap<ClusterId, usize>,
    ids: IdGen,
    clock: DecayClock,
}

impl DependencyTree {
    pub fn new(dim: usize, radius: f64, cut: f64) -> Self {
        DependencyTree {
            dim,
            radius,
            cut,
            cells: Vec::new(),
            index: HashMap::new(),
            ids: IdGen::default(),
            clock: DecayClock::default(),
        }
    }

    pub fn cells(&self) -> &[DptCell] {
        &self.cells
    }

    pub fn cut(&self) -> f64 {
        self.cut
    }

    fn nearest_denser(&self, i: usize) -> (Option<ClusterId>, f64) {
        let me = &self.cells[i];
        let mut best: (Option<ClusterId>, f64) = (None, 0.0);
        let mut best_d = f64::INFINITY;
        for (j, c) in self.cells.iter().enumerate() {
            if j == i || c.density() <= me.density() {
                continue;
            }
            let d = squared_distance(&c.seed, &me.seed);
            if d < best_d {
                best_d = d;
                best = (Some(c.id), d.sqrt());
            }
        }
        best
    }

    fn recompute(&mut self, i: usize) {
        let (dep, dist) = self.nearest_denser(i);
        self.cells[i].dep = dep;
        self.cells[i].dep_dist = dist;
    }

    /// Cell `i` gained density: it may now be the nearest denser cell for
    /// lighter cells, and its own candidate set shrank.
    fn after_increase(&mut self, i: usize) {
        let id = self.cells[i].id;
        let density = self.cells[i].density();
        let seed = self.cells[i].seed.clone();
        for (j, c) in self.cells.iter_mut().enumerate() {
            if j == i || c.density() >= density {
                continue;
            }
            let d = distance(&c.seed, &seed);
            if c.dep.is_none() || d < c.dep_dist || c.dep == Some(id) {
                c.dep = Some(id);
                c.dep_dist = d;
            }
        }
        self.recompute(i);
    }

    /// Cell `i` lost density: cells leaning on it may need a new target.
    fn after_decrease(&mut self, i: usize) {
        let id = self.cells[i].id;
        let density = self.cells[i].density();
        let stale: Vec<usize> = self
            .cells
            .iter()
            .enumerate()
            .filter(|(j, c)| *j != i && c.dep == Some(id) && c.density() >= density)
            .map(|(j, _)| j)
            .collect();
        for j in stale {
            self.recompute(j);
        }
        self.recompute(i);
    }

    fn remove_at(&mut self, i: usize) -> DptCell {
        let cell = self.cells.swap_remove(i);
        self.index.remove(&cell.id);
        if i < self.cells.len() {
            self.index.insert(self.cells[i].id, i);
        }
        let orphans: Vec<usize> = self
            .cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.dep == Some(cell.id))
            .map(|(j, _)| j)
            .collect();
        for j in orphans {
            self.recompute(j);
        }
        cell
    }

    fn root_of(&self, mut i: usize, cut: f64) -> usize {
        loop {
            let c = &self.cells[i];
            match c.dep {
                Some(dep) if c.dep_dist <= cut => i = self.index[&dep],
                _ => return i,
            }
        }
    }

    /// Groups cells into clusters: a cell whose link is missing or longer
    /// than `cut` is a root, every other cell joins its chain's root.
    pub fn extract_clusters(&self, cut: f64) -> ClusterSnapshot {
        let mut order = Vec::new();
        let mut merged: HashMap<usize, ClusterFeature> = HashMap::new();
        for i in 0..self.cells.len() {
            let root = self.root_of(i, cut);
            let acc = merged.entry(root).or_insert_with(|| {
                order.push(root);
                ClusterFeature::empty(self.dim)
            });
            acc.absorb(&self.cells[i].cf).expect("uniform dimension");
        }
        ClusterSnapshot::new(order.iter().map(|r| merged[r].to_center()).collect())
    }

    /// Exhaustively checks that every link targets the nearest strictly
    /// denser cell.
    pub fn check_dependencies(&self) -> std::result::Result<(), String> {
        for (i, c) in self.cells.iter().enumerate() {
            let (dep, dist) = self.nearest_denser(i);
            match (c.dep, dep) {
                (None, None) => {}
                (Some(a), Some(_)) => {
                    let target = &self.cells[self.index[&a]];
                    if target.density() <= c.density() {
                        return Err(format!("cell {} links to a lighter cell", c.id));
                    }
                    if (c.dep_dist - dist).abs() > 1e-9 * dist.max(1.0) {
                        return Err(format!("cell {} does not link to its nearest denser cell", c.id));
                    }
                }
                _ => return Err(format!("cell {} has the wrong link state", c.id)),
            }
        }
        Ok(())
    }
}

impl Summary for DependencyTree {
    fn kind(&self) -> StructureKind {
        StructureKind::Dpt
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn insert_cf(&mut self, cf: ClusterFeature) -> Result<ClusterAssignment> {
        check_dim(self.dim, cf.dim())?;
        let x = cf.centroid();
        let nearest = super::nearest_index(&x, self.cells.iter().map(|c| c.seed.as_slice()));
        let i = match nearest {
            Some((i, d2)) if d2.sqrt() <= self.radius => {
                self.cells[i].cf.absorb(&cf)?;
                i
            }
            _ => {
                let id = self.ids.next();
                self.cells.push(DptCell {
                    id,
                    seed: x,
                    cf,
                    dep: None,
                    dep_dist: 0.0,
                });
                self.index.insert(id, self.cells.len() - 1);
                self.cells.len() - 1
            }
        };
        self.after_increase(i);

        let mut depth = 1;
        let mut j = i;
        while let Some(dep) = self.cells[j].dep.filter(|_| self.cells[j].dep_dist <= self.cut) {
            j = self.index[&dep];
            depth += 1;
        }
        Ok(ClusterAssignment {
            cluster: self.cells[j].id,
            holder: self.cells[i].id,
            path: InsertPath::Hierarchical { depth },
        })
    }

    fn snapshot(&self) -> ClusterSnapshot {
        self.extract_clusters(self.cut)
    }

    fn clusters(&self) -> Vec<(ClusterId, ClusterFeature)> {
        self.cells.iter().map(|c| (c.id, c.cf.clone())).collect()
    }

    fn nearest_distance(&self, x: &[f64]) -> Option<f64> {
        self.cells
            .iter()
            .map(|c| squared_distance(&c.cf.centroid(), x))
            .min_by(f64::total_cmp)
            .map(f64::sqrt)
    }

    fn decay_all(&mut self, now: Timestamp, decay: &Decay) {
        let Some(factor) = self.clock.advance(now, decay) else {
            return;
        };
        // uniform scaling keeps the density order, so links stay valid
        for c in &mut self.cells {
            c.cf.scale(factor);
        }
        while let Some(i) = self.cells.iter().position(|c| c.cf.n < WEIGHT_EPS) {
            self.remove_at(i);
        }
    }

    fn remove_cluster(&mut self, id: ClusterId) -> Result<ClusterFeature> {
        let i = *self.index.get(&id).ok_or(Error::ClusterNotFound(id))?;
        Ok(self.remove_at(i).cf)
    }

    fn subtract(&mut self, id: ClusterId, cf: &ClusterFeature) -> Result<bool> {
        check_dim(self.dim, cf.dim())?;
        let Some(&i) = self.index.get(&id) else {
            return Ok(false);
        };
        self.cells[i].cf.subtract(cf)?;
        if self.cells[i].cf.n <= WEIGHT_EPS {
            self.remove_at(i);
        } else {
            self.after_decrease(i);
        }
        Ok(true)
    }

    fn clear(&mut self) {
        *self = DependencyTree::new(self.dim, self.radius, self.cut);
    }

    fn total_weight(&self) -> f64 {
        self.cells.iter().map(|c| c.cf.n).sum()
    }

    fn len(&self) -> usize {
        self.cells.len()
    }
}
