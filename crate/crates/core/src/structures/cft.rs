//! Clustering-feature tree (BIRCH style).

use std::collections::HashMap;

use super::{ClusterAssignment, DecayClock, IdGen, InsertPath, Summary};
use crate::error::{check_dim, Error, Result};
use crate::types::{
    squared_distance, ClusterFeature, ClusterId, ClusterSnapshot, Decay, StructureKind, Timestamp, WEIGHT_EPS,
};

#[derive(Debug, Clone)]
struct Entry {
    cf: ClusterFeature,
    /// Child node for internal entries.
    child: Option<usize>,
    /// Cluster id for leaf entries.
    id: ClusterId,
}

#[derive(Debug, Clone)]
struct Node {
    entries: Vec<Entry>,
    leaf: bool,
    parent: Option<usize>,
}

/// Height-balanced tree of clustering features. Leaf entries are the
/// temporal clusters; every internal entry is the sum of its child's entries.
#[derive(Debug, Clone)]
pub struct CfTree {
    dim: usize,
    branching: usize,
    threshold: f64,
    nodes: Vec<Option<Node>>,
    free: Vec<usize>,
    root: usize,
    locate: HashMap<ClusterId, usize>,
    ids: IdGen,
    clock: DecayClock,
}

impl CfTree {
    pub fn new(dim: usize, branching: usize, threshold: f64) -> Self {
        CfTree {
            dim,
            branching: branching.max(2),
            threshold,
            nodes: vec![Some(Node {
                entries: Vec::new(),
                leaf: true,
                parent: None,
            })],
            free: Vec::new(),
            root: 0,
            locate: HashMap::new(),
            ids: IdGen::default(),
            clock: DecayClock::default(),
        }
    }

    fn node(&self, idx: usize) -> &Node {
        self.nodes[idx].as_ref().expect("live node")
    }

    fn node_mut(&mut self, idx: usize) -> &mut Node {
        self.nodes[idx].as_mut().expect("live node")
    }

    fn alloc(&mut self, node: Node) -> usize {
        if let Some(idx) = self.free.pop() {
            self.nodes[idx] = Some(node);
            idx
        } else {
            self.nodes.push(Some(node));
            self.nodes.len() - 1
        }
    }

    fn release(&mut self, idx: usize) {
        self.nodes[idx] = None;
        self.free.push(idx);
    }

    fn node_cf(&self, idx: usize) -> ClusterFeature {
        let mut acc = ClusterFeature::empty(self.dim);
        for e in &self.node(idx).entries {
            acc.absorb(&e.cf).expect("uniform dimension");
        }
        acc
    }

    fn entry_in_parent(&self, child: usize) -> Option<(usize, usize)> {
        let parent = self.node(child).parent?;
        let pos = self
            .node(parent)
            .entries
            .iter()
            .position(|e| e.child == Some(child))
            .expect("child registered in parent");
        Some((parent, pos))
    }

    fn closest_entry(&self, node: usize, x: &[f64]) -> usize {
        let entries = &self.node(node).entries;
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, e) in entries.iter().enumerate() {
            let d = squared_distance(&e.cf.centroid(), x);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Tree height measured in nodes from root to leaf.
    pub fn depth(&self) -> usize {
        let mut depth = 1;
        let mut idx = self.root;
        while !self.node(idx).leaf {
            idx = self.node(idx).entries[0].child.expect("internal entry has child");
            depth += 1;
        }
        depth
    }

    /// Verifies that every internal entry equals the sum of its child's
    /// entries (relative tolerance `tol`) and that parent links agree.
    pub fn check_consistency(&self, tol: f64) -> std::result::Result<(), String> {
        self.check_node(self.root, tol)
    }

    fn check_node(&self, idx: usize, tol: f64) -> std::result::Result<(), String> {
        let node = self.node(idx);
        if idx != self.root && node.entries.is_empty() {
            return Err(format!("non-root node {idx} is empty"));
        }
        if node.entries.len() > self.branching {
            return Err(format!("node {idx} overflows"));
        }
        if node.leaf {
            for e in &node.entries {
                if self.locate.get(&e.id) != Some(&idx) {
                    return Err(format!("leaf entry {} not located at {idx}", e.id));
                }
            }
            return Ok(());
        }
        for e in &node.entries {
            let child = e.child.ok_or("internal entry without child")?;
            if self.node(child).parent != Some(idx) {
                return Err(format!("node {child} has wrong parent"));
            }
            let sum = self.node_cf(child);
            let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
            if !close(sum.n, e.cf.n) || !close(sum.ss, e.cf.ss) {
                return Err(format!("entry for node {child} disagrees with its children"));
            }
            for (a, b) in sum.ls.iter().zip(&e.cf.ls) {
                if !close(*a, *b) {
                    return Err(format!("linear sum for node {child} disagrees"));
                }
            }
            self.check_node(child, tol)?;
        }
        Ok(())
    }

    /// Splits an overflowing node around its farthest pair of entries and
    /// pushes the new sibling into the parent, recursing upwards.
    fn split(&mut self, idx: usize) {
        let entries = std::mem::take(&mut self.node_mut(idx).entries);
        let centroids: Vec<Vec<f64>> = entries.iter().map(|e| e.cf.centroid()).collect();
        let (mut sa, mut sb, mut far) = (0, 1, -1.0);
        for i in 0..centroids.len() {
            for j in i + 1..centroids.len() {
                let d = squared_distance(&centroids[i], &centroids[j]);
                if d > far {
                    far = d;
                    sa = i;
                    sb = j;
                }
            }
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (i, e) in entries.into_iter().enumerate() {
            let to_left = if i == sa {
                true
            } else if i == sb {
                false
            } else {
                squared_distance(&centroids[i], &centroids[sa]) <= squared_distance(&centroids[i], &centroids[sb])
            };
            if to_left {
                left.push(e);
            } else {
                right.push(e);
            }
        }

        let leaf = self.node(idx).leaf;
        let parent = self.node(idx).parent;
        self.node_mut(idx).entries = left;
        let sibling = self.alloc(Node {
            entries: right,
            leaf,
            parent,
        });
        self.relink_children(sibling);

        match parent {
            None => {
                let left_cf = self.node_cf(idx);
                let right_cf = self.node_cf(sibling);
                let new_root = self.alloc(Node {
                    entries: vec![
                        Entry {
                            cf: left_cf,
                            child: Some(idx),
                            id: 0,
                        },
                        Entry {
                            cf: right_cf,
                            child: Some(sibling),
                            id: 0,
                        },
                    ],
                    leaf: false,
                    parent: None,
                });
                self.node_mut(idx).parent = Some(new_root);
                self.node_mut(sibling).parent = Some(new_root);
                self.root = new_root;
            }
            Some(p) => {
                let (_, pos) = self.entry_in_parent(idx).expect("has parent");
                let left_cf = self.node_cf(idx);
                let right_cf = self.node_cf(sibling);
                let pnode = self.node_mut(p);
                pnode.entries[pos].cf = left_cf;
                pnode.entries.push(Entry {
                    cf: right_cf,
                    child: Some(sibling),
                    id: 0,
                });
                if pnode.entries.len() > self.branching {
                    self.split(p);
                }
            }
        }
    }

    /// After entries moved into `idx`, point their children (or located leaf
    /// ids) at it.
    fn relink_children(&mut self, idx: usize) {
        let node = self.node(idx);
        if node.leaf {
            let ids: Vec<ClusterId> = node.entries.iter().map(|e| e.id).collect();
            for id in ids {
                self.locate.insert(id, idx);
            }
        } else {
            let children: Vec<usize> = node.entries.iter().filter_map(|e| e.child).collect();
            for c in children {
                self.node_mut(c).parent = Some(idx);
            }
        }
    }

    /// Subtracts `cf` from every ancestor entry of `idx`.
    fn subtract_upwards(&mut self, mut idx: usize, cf: &ClusterFeature) {
        while let Some((parent, pos)) = self.entry_in_parent(idx) {
            self.node_mut(parent).entries[pos]
                .cf
                .subtract(cf)
                .expect("uniform dimension");
            idx = parent;
        }
    }

    /// Drops emptied nodes bottom-up starting at `idx` and collapses a root
    /// left with a single child.
    fn prune(&mut self, mut idx: usize) {
        while idx != self.root && self.node(idx).entries.is_empty() {
            let (parent, pos) = self.entry_in_parent(idx).expect("non-root has parent");
            self.node_mut(parent).entries.remove(pos);
            self.release(idx);
            idx = parent;
        }
        loop {
            let root = self.node(self.root);
            if root.leaf {
                break;
            }
            match root.entries.len() {
                0 => {
                    self.node_mut(self.root).leaf = true;
                    break;
                }
                1 => {
                    let child = root.entries[0].child.expect("internal entry has child");
                    let old = self.root;
                    self.node_mut(child).parent = None;
                    self.root = child;
                    self.release(old);
                }
                _ => break,
            }
        }
    }

    fn leaf_entries(&self) -> impl Iterator<Item = &Entry> {
        self.nodes
            .iter()
            .flatten()
            .filter(|n| n.leaf)
            .flat_map(|n| n.entries.iter())
    }

    fn remove_entry(&mut self, id: ClusterId) -> Result<ClusterFeature> {
        let leaf = *self.locate.get(&id).ok_or(Error::ClusterNotFound(id))?;
        let pos = self
            .node(leaf)
            .entries
            .iter()
            .position(|e| e.id == id)
            .ok_or(Error::ClusterNotFound(id))?;
        let entry = self.node_mut(leaf).entries.remove(pos);
        self.locate.remove(&id);
        self.subtract_upwards(leaf, &entry.cf);
        self.prune(leaf);
        Ok(entry.cf)
    }
}

impl Summary for CfTree {
    fn kind(&self) -> StructureKind {
        StructureKind::Cft
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn insert_cf(&mut self, cf: ClusterFeature) -> Result<ClusterAssignment> {
        check_dim(self.dim, cf.dim())?;
        let x = cf.centroid();
        let mut path = Vec::new();
        let mut idx = self.root;
        while !self.node(idx).leaf {
            let pos = self.closest_entry(idx, &x);
            path.push((idx, pos));
            idx = self.node(idx).entries[pos].child.expect("internal entry has child");
        }
        let depth = path.len() + 1;

        for &(node, pos) in &path {
            self.node_mut(node).entries[pos].cf.absorb(&cf)?;
        }

        let mut target = None;
        if !self.node(idx).entries.is_empty() {
            let pos = self.closest_entry(idx, &x);
            let entry = &self.node(idx).entries[pos];
            let mut merged = entry.cf.clone();
            merged.absorb(&cf)?;
            if merged.radius() <= self.threshold {
                let id = entry.id;
                self.node_mut(idx).entries[pos].cf = merged;
                target = Some(id);
            }
        }
        let id = match target {
            Some(id) => id,
            None => {
                let id = self.ids.next();
                self.node_mut(idx).entries.push(Entry { cf, child: None, id });
                self.locate.insert(id, idx);
                if self.node(idx).entries.len() > self.branching {
                    self.split(idx);
                }
                id
            }
        };
        Ok(ClusterAssignment {
            cluster: id,
            holder: id,
            path: InsertPath::Hierarchical { depth },
        })
    }

    fn snapshot(&self) -> ClusterSnapshot {
        ClusterSnapshot::new(self.leaf_entries().map(|e| e.cf.to_center()).collect())
    }

    fn clusters(&self) -> Vec<(ClusterId, ClusterFeature)> {
        self.leaf_entries().map(|e| (e.id, e.cf.clone())).collect()
    }

    fn nearest_distance(&self, x: &[f64]) -> Option<f64> {
        self.leaf_entries()
            .map(|e| squared_distance(&e.cf.centroid(), x))
            .min_by(f64::total_cmp)
            .map(f64::sqrt)
    }

    fn decay_all(&mut self, now: Timestamp, decay: &Decay) {
        let Some(factor) = self.clock.advance(now, decay) else {
            return;
        };
        for node in self.nodes.iter_mut().flatten() {
            for e in &mut node.entries {
                e.cf.scale(factor);
            }
        }
        let dead: Vec<ClusterId> = self
            .leaf_entries()
            .filter(|e| e.cf.n < WEIGHT_EPS)
            .map(|e| e.id)
            .collect();
        for id in dead {
            let _ = self.remove_entry(id);
        }
    }

    fn remove_cluster(&mut self, id: ClusterId) -> Result<ClusterFeature> {
        self.remove_entry(id)
    }

    fn subtract(&mut self, id: ClusterId, cf: &ClusterFeature) -> Result<bool> {
        check_dim(self.dim, cf.dim())?;
        let Some(&leaf) = self.locate.get(&id) else {
            return Ok(false);
        };
        let node = self.node_mut(leaf);
        let pos = node.entries.iter().position(|e| e.id == id).expect("located");
        node.entries[pos].cf.subtract(cf)?;
        let remaining = node.entries[pos].cf.n;
        self.subtract_upwards(leaf, cf);
        if remaining <= WEIGHT_EPS {
            self.remove_entry(id)?;
        }
        Ok(true)
    }

    fn clear(&mut self) {
        *self = CfTree::new(self.dim, self.branching, self.threshold);
    }

    fn total_weight(&self) -> f64 {
        self.leaf_entries().map(|e| e.cf.n).sum()
    }

    fn len(&self) -> usize {
        self.locate.len()
    }
}
