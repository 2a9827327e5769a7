//! Density grid: every point lands in the axis-aligned cell that contains it.

use std::collections::HashMap;

use super::{ClusterAssignment, DecayClock, IdGen, Summary};
use crate::error::{check_dim, Error, Result};
use crate::types::{
    squared_distance, ClusterFeature, ClusterId, ClusterSnapshot, Decay, StructureKind, Timestamp, WEIGHT_EPS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub id: ClusterId,
    pub coords: Vec<i64>,
    pub cf: ClusterFeature,
}

impl GridCell {
    pub fn density(&self) -> f64 {
        self.cf.n
    }

    pub fn last_update(&self) -> Timestamp {
        self.cf.last_update
    }
}

#[derive(Debug, Clone)]
pub struct Grids {
    dim: usize,
    cell_len: f64,
    cells: HashMap<Vec<i64>, GridCell>,
    by_id: HashMap<ClusterId, Vec<i64>>,
    ids: IdGen,
    clock: DecayClock,
}

impl Grids {
    pub fn new(dim: usize, cell_len: f64) -> Self {
        Grids {
            dim,
            cell_len,
            cells: HashMap::new(),
            by_id: HashMap::new(),
            ids: IdGen::default(),
            clock: DecayClock::default(),
        }
    }

    pub fn coords_of(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|v| (v / self.cell_len).floor() as i64).collect()
    }

    pub fn cell(&self, coords: &[i64]) -> Option<&GridCell> {
        self.cells.get(coords)
    }

    /// Cells sorted by id, so iteration order does not depend on hashing.
    pub fn cells(&self) -> Vec<&GridCell> {
        let mut v: Vec<&GridCell> = self.cells.values().collect();
        v.sort_by_key(|c| c.id);
        v
    }
}

impl Summary for Grids {
    fn kind(&self) -> StructureKind {
        StructureKind::Grids
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn insert_cf(&mut self, cf: ClusterFeature) -> Result<ClusterAssignment> {
        check_dim(self.dim, cf.dim())?;
        let coords = self.coords_of(&cf.centroid());
        if let Some(cell) = self.cells.get_mut(&coords) {
            cell.cf.absorb(&cf)?;
            return Ok(ClusterAssignment::partitional(cell.id));
        }
        let id = self.ids.next();
        self.by_id.insert(id, coords.clone());
        self.cells.insert(coords.clone(), GridCell { id, coords, cf });
        Ok(ClusterAssignment::partitional(id))
    }

    fn snapshot(&self) -> ClusterSnapshot {
        ClusterSnapshot::new(self.cells().into_iter().map(|c| c.cf.to_center()).collect())
    }

    fn clusters(&self) -> Vec<(ClusterId, ClusterFeature)> {
        self.cells().into_iter().map(|c| (c.id, c.cf.clone())).collect()
    }

    fn nearest_distance(&self, x: &[f64]) -> Option<f64> {
        self.cells
            .values()
            .map(|c| squared_distance(&c.cf.centroid(), x))
            .min_by(f64::total_cmp)
            .map(f64::sqrt)
    }

    fn decay_all(&mut self, now: Timestamp, decay: &Decay) {
        let Some(factor) = self.clock.advance(now, decay) else {
            return;
        };
        for c in self.cells.values_mut() {
            c.cf.scale(factor);
        }
        let dead: Vec<Vec<i64>> = self
            .cells
            .iter()
            .filter(|(_, c)| c.cf.n < WEIGHT_EPS)
            .map(|(k, _)| k.clone())
            .collect();
        for k in dead {
            if let Some(c) = self.cells.remove(&k) {
                self.by_id.remove(&c.id);
            }
        }
    }

    fn remove_cluster(&mut self, id: ClusterId) -> Result<ClusterFeature> {
        let coords = self.by_id.remove(&id).ok_or(Error::ClusterNotFound(id))?;
        Ok(self.cells.remove(&coords).expect("index in sync").cf)
    }

    fn subtract(&mut self, id: ClusterId, cf: &ClusterFeature) -> Result<bool> {
        check_dim(self.dim, cf.dim())?;
        let Some(coords) = self.by_id.get(&id) else {
            return Ok(false);
        };
        let cell = self.cells.get_mut(coords).expect("index in sync");
        cell.cf.subtract(cf)?;
        if cell.cf.n <= WEIGHT_EPS {
            let coords = self.by_id.remove(&id).expect("present");
            self.cells.remove(&coords);
        }
        Ok(true)
    }

    fn clear(&mut self) {
        *self = Grids::new(self.dim, self.cell_len);
    }

    fn total_weight(&self) -> f64 {
        self.cells.values().map(|c| c.cf.n).sum()
    }

    fn len(&self) -> usize {
        self.cells.len()
    }
}
