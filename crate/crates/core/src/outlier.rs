//! Outlier mechanisms: the distance test, the outlier buffer, density and
//! timer checks.

use crate::error::{check_dim, Result};
use crate::structures::{ClusterAssignment, Summary};
use crate::types::{
    squared_distance, ClusterFeature, ClusterId, OutlierKind, StreamPoint, Timestamp, WeightedCenter, WEIGHT_EPS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BufferCluster {
    pub id: ClusterId,
    pub cf: ClusterFeature,
}

/// Holding area for small clusters of suspected outliers.
#[derive(Debug, Clone)]
pub struct OutlierBuffer {
    clusters: Vec<BufferCluster>,
    capacity: usize,
    radius: f64,
    next_id: ClusterId,
    evictions: u64,
}

impl OutlierBuffer {
    /// `radius` is how close an outlier must be to a buffered cluster's
    /// centroid to join it.
    pub fn new(capacity: usize, radius: f64) -> Self {
        OutlierBuffer {
            clusters: Vec::new(),
            capacity: capacity.max(1),
            radius,
            next_id: 0,
            evictions: 0,
        }
    }

    pub fn clusters(&self) -> &[BufferCluster] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn evictions(&self) -> u64 {
        self.evictions
    }

    pub fn total_weight(&self) -> f64 {
        self.clusters.iter().map(|c| c.cf.n).sum()
    }

    pub fn snapshot_centers(&self) -> Vec<WeightedCenter> {
        self.clusters.iter().map(|c| c.cf.to_center()).collect()
    }

    /// Drops every buffered cluster; ids keep increasing.
    pub fn clear(&mut self) {
        self.clusters.clear();
    }

    /// Adds a cluster, evicting the least recently updated one if full.
    pub fn push(&mut self, cf: ClusterFeature) -> ClusterId {
        if self.clusters.len() >= self.capacity {
            let lru = self
                .clusters
                .iter()
                .enumerate()
                .min_by_key(|(_, c)| c.cf.last_update)
                .map(|(i, _)| i)
                .expect("non-empty");
            self.clusters.remove(lru);
            self.evictions += 1;
        }
        let id = self.next_id;
        self.next_id += 1;
        self.clusters.push(BufferCluster { id, cf });
        id
    }

    /// Puts `p` into the closest buffered cluster within the join radius or
    /// opens a new one. Returns the cluster's position and id.
    fn absorb(&mut self, cf: ClusterFeature) -> Result<(usize, ClusterId)> {
        let x = cf.centroid();
        let nearest = self
            .clusters
            .iter()
            .enumerate()
            .map(|(i, c)| (i, squared_distance(&c.cf.centroid(), &x)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((i, d2)) = nearest {
            if d2.sqrt() <= self.radius {
                check_dim(self.clusters[i].cf.dim(), cf.dim())?;
                self.clusters[i].cf.absorb(&cf)?;
                return Ok((i, self.clusters[i].id));
            }
        }
        let id = self.push(cf);
        Ok((self.clusters.len() - 1, id))
    }

    pub fn subtract(&mut self, id: ClusterId, cf: &ClusterFeature) -> Result<bool> {
        let Some(i) = self.clusters.iter().position(|c| c.id == id) else {
            return Ok(false);
        };
        self.clusters[i].cf.subtract(cf)?;
        if self.clusters[i].cf.n <= WEIGHT_EPS {
            self.clusters.remove(i);
        }
        Ok(true)
    }

    fn take(&mut self, i: usize) -> BufferCluster {
        self.clusters.remove(i)
    }
}

/// Outcome of running one point through the outlier mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierVerdict {
    pub is_outlier: bool,
    /// Buffer cluster the point joined, if it was buffered.
    pub buffered: Option<ClusterId>,
    /// Set when that buffer cluster became dense and moved into the summary.
    pub promoted: Option<ClusterAssignment>,
}

impl OutlierVerdict {
    fn inlier() -> Self {
        OutlierVerdict {
            is_outlier: false,
            buffered: None,
            promoted: None,
        }
    }
}

/// Whether `p` lies strictly farther than `delta` from every cluster of the
/// summary. An empty summary never flags a point.
pub fn is_distance_outlier(structure: &dyn Summary, p: &StreamPoint, delta: f64) -> bool {
    structure.nearest_distance(&p.values).is_some_and(|d| d > delta)
}

/// Runs the point-level part of the mechanism. `weight` is the weight the
/// point would enter the summary with; `density` is the promotion threshold.
pub fn outlier_step(
    mech: OutlierKind,
    p: &StreamPoint,
    weight: f64,
    structure: &mut dyn Summary,
    buffer: &mut OutlierBuffer,
    delta: f64,
    density: f64,
) -> Result<OutlierVerdict> {
    if mech == OutlierKind::None || !is_distance_outlier(structure, p, delta) {
        return Ok(OutlierVerdict::inlier());
    }
    if !mech.is_buffered() {
        return Ok(OutlierVerdict {
            is_outlier: true,
            buffered: None,
            promoted: None,
        });
    }
    let mut cf = ClusterFeature::singleton(p);
    cf.scale(weight / p.weight);
    cf.last_update = p.timestamp;
    let (i, id) = buffer.absorb(cf)?;
    let promoted = if buffer.clusters[i].cf.n >= density {
        let cl = buffer.take(i);
        Some(structure.insert_cf(cl.cf)?)
    } else {
        None
    };
    Ok(OutlierVerdict {
        is_outlier: true,
        buffered: Some(id),
        promoted,
    })
}

/// What a regular check did.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    /// Summary clusters moved to the buffer, as (summary id, buffer id).
    pub demoted: Vec<(ClusterId, ClusterId)>,
    /// Summary clusters deleted outright.
    pub removed: Vec<ClusterId>,
    /// Buffer clusters purged by the timer.
    pub purged: Vec<ClusterId>,
}

/// Periodic maintenance: clusters that are neither dense (weight ≥
/// `density`) nor, for timer mechanisms, active (updated within `timer`
/// ticks of `now`) leave the summary. Buffered mechanisms keep them in the
/// buffer; buffer-timer also purges inactive buffer clusters.
pub fn regular_check(
    mech: OutlierKind,
    structure: &mut dyn Summary,
    buffer: &mut OutlierBuffer,
    density: f64,
    timer: f64,
    now: Timestamp,
) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    if mech == OutlierKind::None {
        return Ok(report);
    }
    let active = |cf: &ClusterFeature| now.saturating_sub(cf.last_update) as f64 <= timer;
    structure.flush();
    for (id, cf) in structure.clusters() {
        let dense = cf.n >= density;
        let alive = mech.uses_timer() && active(&cf);
        if dense || alive {
            continue;
        }
        let cf = structure.remove_cluster(id)?;
        if mech.is_buffered() {
            let bid = buffer.push(cf);
            report.demoted.push((id, bid));
        } else {
            report.removed.push(id);
        }
    }
    if mech == OutlierKind::BufferTimer {
        buffer.clusters.retain(|c| {
            let keep = active(&c.cf);
            if !keep {
                report.purged.push(c.id);
            }
            keep
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{CfTree, MicroClusters};

    fn pt(t: u64, x: f64) -> StreamPoint {
        StreamPoint::new(t, vec![x, 0.0])
    }

    #[test]
    fn basic_passes_close_points() {
        let mut s = MicroClusters::new(2, 10, 2.0, 1e9);
        s.insert(&pt(0, 0.0)).unwrap();
        let mut b = OutlierBuffer::new(10, 1.0);
        let v = outlier_step(OutlierKind::Basic, &pt(1, 3.0), 1.0, &mut s, &mut b, 5.0, 3.0).unwrap();
        assert!(!v.is_outlier);
    }

    #[test]
    fn buffer_promotes_at_density() {
        let mut s = CfTree::new(2, 8, 1.0);
        s.insert(&pt(0, 0.0)).unwrap();
        let mut b = OutlierBuffer::new(10, 1.0);
        for t in 1..=3 {
            let v = outlier_step(OutlierKind::Buffer, &pt(t, 50.0), 1.0, &mut s, &mut b, 5.0, 3.0).unwrap();
            assert!(v.is_outlier);
            assert_eq!(v.promoted.is_some(), t == 3);
        }
        assert!(b.is_empty());
        let snap = s.snapshot();
        assert_eq!(snap.len(), 2);
        let promoted = snap.centers.iter().find(|c| c.centroid[0] == 50.0).unwrap();
        assert_eq!(promoted.weight, 3.0);
    }

    #[test]
    fn timer_keeps_recent_sparse_clusters() {
        let mut s = MicroClusters::new(2, 10, 2.0, 1e9);
        s.insert(&pt(101, 0.0)).unwrap();
        let mut b = OutlierBuffer::new(10, 1.0);
        // updated at now - t + 1
        let r = regular_check(OutlierKind::Timer, &mut s, &mut b, 4.0, 100.0, 200).unwrap();
        assert!(r.removed.is_empty());
        assert_eq!(s.len(), 1);
        let r = regular_check(OutlierKind::Timer, &mut s, &mut b, 4.0, 100.0, 202).unwrap();
        assert_eq!(r.removed.len(), 1);
    }

    #[test]
    fn basic_removes_sparse_clusters() {
        let mut s = MicroClusters::new(2, 10, 2.0, 1e9);
        s.insert(&pt(0, 0.0)).unwrap();
        for t in 1..6 {
            s.insert(&pt(t, 100.0)).unwrap();
        }
        let mut b = OutlierBuffer::new(10, 1.0);
        let r = regular_check(OutlierKind::Basic, &mut s, &mut b, 4.0, 100.0, 6).unwrap();
        assert_eq!(r.removed.len(), 1);
        assert_eq!(s.total_weight(), 5.0);
    }

    #[test]
    fn buffer_timer_demotes_then_purges() {
        let mut s = MicroClusters::new(2, 10, 2.0, 1e9);
        s.insert(&pt(0, 0.0)).unwrap();
        let mut b = OutlierBuffer::new(10, 1.0);
        let r = regular_check(OutlierKind::BufferTimer, &mut s, &mut b, 4.0, 10.0, 20).unwrap();
        assert_eq!(r.demoted.len(), 1);
        assert_eq!(b.len(), 0, "demoted cluster was already inactive and purged");
        assert_eq!(r.purged.len(), 1);
    }

    #[test]
    fn full_buffer_evicts_least_recent() {
        let mut b = OutlierBuffer::new(2, 0.5);
        b.push(ClusterFeature::from_weighted(&[0.0], 1.0, 5));
        b.push(ClusterFeature::from_weighted(&[10.0], 1.0, 2));
        b.push(ClusterFeature::from_weighted(&[20.0], 1.0, 9));
        assert_eq!(b.evictions(), 1);
        let xs: Vec<f64> = b.clusters().iter().map(|c| c.cf.centroid()[0]).collect();
        assert_eq!(xs, vec![0.0, 20.0]);
    }
}
