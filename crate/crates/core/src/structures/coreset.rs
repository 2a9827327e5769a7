//! Coreset tree with merge-and-reduce buckets (StreamKM++ style).
//!
//! Raw input collects in a pending buffer of `m` slots. A full buffer is
//! reduced to an `m`-point weighted coreset and stored as a level-0 bucket;
//! two buckets on the same level are combined and reduced into the next
//! level, so at most one bucket lives on each level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Aliases, ClusterAssignment, DecayClock, IdGen, InsertPath, Summary};
use crate::error::{check_dim, Error, Result};
use crate::types::{
    squared_distance, ClusterFeature, ClusterId, ClusterSnapshot, Decay, StructureKind, Timestamp, WEIGHT_EPS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CoresetItem {
    pub id: ClusterId,
    pub cf: ClusterFeature,
}

#[derive(Debug, Clone)]
pub struct CoresetTree {
    dim: usize,
    m: usize,
    seed: u64,
    pending: Vec<CoresetItem>,
    buckets: Vec<Option<Vec<CoresetItem>>>,
    rng: ChaCha8Rng,
    ids: IdGen,
    aliases: Aliases,
    clock: DecayClock,
}

struct Leaf {
    members: Vec<usize>,
    rep: usize,
    cost: f64,
}

fn leaf_cost(points: &[Vec<f64>], weights: &[f64], members: &[usize], rep: usize) -> f64 {
    members
        .iter()
        .map(|&i| weights[i] * squared_distance(&points[i], &points[rep]))
        .sum()
}

fn sample_weighted<R: Rng>(rng: &mut R, members: &[usize], mass: impl Fn(usize) -> f64) -> usize {
    let total: f64 = members.iter().map(|&i| mass(i)).sum();
    let mut target = rng.random::<f64>() * total;
    for &i in members {
        let w = mass(i);
        if w <= 0.0 {
            continue;
        }
        if target < w {
            return i;
        }
        target -= w;
    }
    // rounding left us past the end: take the last member with mass
    *members.iter().rev().find(|&&i| mass(i) > 0.0).unwrap_or(&members[0])
}

/// Reduces weighted inputs to at most `m` weighted representatives.
///
/// Starts from one leaf holding every input around a weight-sampled
/// representative, then repeatedly splits the leaf with the largest
/// weighted squared-distance cost: a new representative is drawn from that
/// leaf proportionally to its contribution, and members move to whichever
/// representative is closer. Each output is the pooled feature of one leaf
/// together with the input indices it covers.
pub fn coreset_rebuild<R: Rng>(
    inputs: &[ClusterFeature],
    m: usize,
    rng: &mut R,
) -> Result<Vec<(ClusterFeature, Vec<usize>)>> {
    if m < 1 {
        return Err(Error::config("coreset size must be at least 1"));
    }
    let live: Vec<usize> = (0..inputs.len()).filter(|&i| inputs[i].n > 0.0).collect();
    if live.is_empty() {
        return Ok(Vec::new());
    }
    let points: Vec<Vec<f64>> = inputs.iter().map(ClusterFeature::centroid).collect();
    let weights: Vec<f64> = inputs.iter().map(|c| c.n.max(0.0)).collect();

    let first = sample_weighted(rng, &live, |i| weights[i]);
    let cost = leaf_cost(&points, &weights, &live, first);
    let mut leaves = vec![Leaf {
        members: live,
        rep: first,
        cost,
    }];

    while leaves.len() < m {
        let (target, worst) = leaves
            .iter()
            .enumerate()
            .map(|(i, l)| (i, l.cost))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one leaf");
        if worst <= 0.0 {
            break;
        }
        let leaf = &leaves[target];
        let rep = leaf.rep;
        let q = sample_weighted(rng, &leaf.members, |i| {
            weights[i] * squared_distance(&points[i], &points[rep])
        });
        let (moved, kept): (Vec<usize>, Vec<usize>) = leaf
            .members
            .iter()
            .partition(|&&i| squared_distance(&points[i], &points[q]) < squared_distance(&points[i], &points[rep]));
        let kept_cost = leaf_cost(&points, &weights, &kept, rep);
        let moved_cost = leaf_cost(&points, &weights, &moved, q);
        leaves[target] = Leaf {
            members: kept,
            rep,
            cost: kept_cost,
        };
        leaves.push(Leaf {
            members: moved,
            rep: q,
            cost: moved_cost,
        });
    }

    let dim = inputs[0].dim();
    Ok(leaves
        .into_iter()
        .map(|leaf| {
            let mut cf = ClusterFeature::empty(dim);
            for &i in &leaf.members {
                cf.absorb(&inputs[i]).expect("uniform dimension");
            }
            (cf, leaf.members)
        })
        .collect())
}

impl CoresetTree {
    pub fn new(dim: usize, m: usize, seed: u64) -> Result<Self> {
        if m < 1 {
            return Err(Error::config("coreset size must be at least 1"));
        }
        Ok(CoresetTree {
            dim,
            m,
            seed,
            pending: Vec::with_capacity(m),
            buckets: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            ids: IdGen::default(),
            aliases: Aliases::default(),
            clock: DecayClock::default(),
        })
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Occupied bucket levels, lowest first.
    pub fn levels(&self) -> Vec<usize> {
        self.buckets
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_some())
            .map(|(i, _)| i)
            .collect()
    }

    fn reduce(&mut self, items: Vec<CoresetItem>) -> Vec<CoresetItem> {
        let cfs: Vec<ClusterFeature> = items.iter().map(|i| i.cf.clone()).collect();
        let leaves = coreset_rebuild(&cfs, self.m, &mut self.rng).expect("m validated at build");
        leaves
            .into_iter()
            .map(|(cf, members)| {
                let id = self.ids.next();
                for i in members {
                    self.aliases.link(items[i].id, id);
                }
                CoresetItem { id, cf }
            })
            .collect()
    }

    fn compact_pending(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let raw = std::mem::take(&mut self.pending);
        let mut carry = self.reduce(raw);
        let mut level = 0;
        loop {
            if self.buckets.len() <= level {
                self.buckets.resize(level + 1, None);
            }
            match self.buckets[level].take() {
                None => {
                    self.buckets[level] = Some(carry);
                    break;
                }
                Some(mut existing) => {
                    existing.extend(carry);
                    carry = self.reduce(existing);
                    level += 1;
                }
            }
        }
    }

    fn items(&self) -> impl Iterator<Item = &CoresetItem> {
        self.buckets.iter().flatten().flatten().chain(self.pending.iter())
    }

    fn find_mut(&mut self, id: ClusterId) -> Option<&mut CoresetItem> {
        self.buckets
            .iter_mut()
            .flatten()
            .flatten()
            .chain(self.pending.iter_mut())
            .find(|it| it.id == id)
    }

    fn take(&mut self, id: ClusterId) -> Option<CoresetItem> {
        if let Some(pos) = self.pending.iter().position(|it| it.id == id) {
            return Some(self.pending.remove(pos));
        }
        for slot in self.buckets.iter_mut() {
            if let Some(bucket) = slot {
                if let Some(pos) = bucket.iter().position(|it| it.id == id) {
                    let item = bucket.remove(pos);
                    if bucket.is_empty() {
                        *slot = None;
                    }
                    return Some(item);
                }
            }
        }
        None
    }

    fn nearest_rep(&self, x: &[f64]) -> Option<ClusterId> {
        self.buckets
            .iter()
            .flatten()
            .flatten()
            .map(|it| (it.id, squared_distance(&it.cf.centroid(), x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(id, _)| id)
    }
}

impl Summary for CoresetTree {
    fn kind(&self) -> StructureKind {
        StructureKind::CoreT
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn insert_cf(&mut self, cf: ClusterFeature) -> Result<ClusterAssignment> {
        check_dim(self.dim, cf.dim())?;
        let cluster = self.nearest_rep(&cf.centroid());
        let id = self.ids.next();
        self.pending.push(CoresetItem { id, cf });
        let depth = self.levels().len() + 1;
        if self.pending.len() >= self.m {
            self.compact_pending();
        }
        Ok(ClusterAssignment {
            cluster: cluster.unwrap_or(id),
            holder: id,
            path: InsertPath::Hierarchical { depth },
        })
    }

    fn snapshot(&self) -> ClusterSnapshot {
        ClusterSnapshot::new(self.items().map(|it| it.cf.to_center()).collect())
    }

    fn clusters(&self) -> Vec<(ClusterId, ClusterFeature)> {
        self.items().map(|it| (it.id, it.cf.clone())).collect()
    }

    fn decay_all(&mut self, now: Timestamp, decay: &Decay) {
        let Some(factor) = self.clock.advance(now, decay) else {
            return;
        };
        for bucket in self.buckets.iter_mut().flatten() {
            for it in bucket.iter_mut() {
                it.cf.scale(factor);
            }
            bucket.retain(|it| it.cf.n >= WEIGHT_EPS);
        }
        for slot in self.buckets.iter_mut() {
            if slot.as_ref().is_some_and(|b| b.is_empty()) {
                *slot = None;
            }
        }
    }

    fn remove_cluster(&mut self, id: ClusterId) -> Result<ClusterFeature> {
        self.take(id).map(|it| it.cf).ok_or(Error::ClusterNotFound(id))
    }

    fn subtract(&mut self, id: ClusterId, cf: &ClusterFeature) -> Result<bool> {
        check_dim(self.dim, cf.dim())?;
        let id = self.aliases.resolve(id);
        let Some(item) = self.find_mut(id) else {
            return Ok(false);
        };
        item.cf.subtract(cf)?;
        if item.cf.n <= WEIGHT_EPS {
            self.take(id);
        }
        Ok(true)
    }

    fn clear(&mut self) {
        *self = CoresetTree::new(self.dim, self.m, self.seed).expect("m already validated");
    }

    fn flush(&mut self) {
        self.compact_pending();
    }
}
