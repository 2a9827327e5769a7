//! Regular detection, automatic selection and migration.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::outlier::OutlierBuffer;
use crate::structures::{build, init_from_snapshot, Summary};
use crate::types::{
    squared_distance, ClusterSnapshot, Configuration, Kinds, Objective, OutlierKind, RefineKind, StreamCharacteristics,
    StructureKind, Thresholds, WindowKind,
};

/// Previous detection means kept for the outlier count.
pub const HISTORY_CAP: usize = 32;

/// Points collected between two detections, plus the means of earlier
/// batches.
#[derive(Debug, Clone)]
pub struct DetectionQueue {
    capacity: usize,
    points: Vec<Vec<f64>>,
    history: VecDeque<Vec<f64>>,
}

impl DetectionQueue {
    pub fn new(capacity: usize) -> Self {
        DetectionQueue {
            capacity,
            points: Vec::with_capacity(capacity),
            history: VecDeque::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.points.len() >= self.capacity
    }

    pub fn history(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.history.iter()
    }

    /// Returns true once the queue is full.
    pub fn push(&mut self, values: &[f64]) -> bool {
        self.points.push(values.to_vec());
        self.is_full()
    }

    /// Runs detection on the queued points, records their mean and empties
    /// the queue.
    pub fn detect(&mut self, thresholds: &Thresholds) -> (StreamCharacteristics, DetectionStats) {
        let history: Vec<Vec<f64>> = self.history.iter().cloned().collect();
        let (ch, stats) = detect(&self.points, &history, thresholds);
        if !stats.center.is_empty() {
            self.history.push_back(stats.center.clone());
            while self.history.len() > HISTORY_CAP {
                self.history.pop_front();
            }
        }
        self.points.clear();
        (ch, stats)
    }

    /// Forgets queued points and history, e.g. when the dimension changes.
    pub fn reset(&mut self) {
        self.points.clear();
        self.history.clear();
    }
}

/// Raw counters behind one detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionStats {
    pub samples: usize,
    pub high_dim: usize,
    /// Mean squared distance of the samples to their mean.
    pub variance: f64,
    pub outliers: usize,
    pub center: Vec<f64>,
}

/// Detects the three stream characteristics of a batch. `history` holds the
/// means of earlier batches; a sample counts as an outlier when it is
/// farther than the distance threshold from all of them.
pub fn detect(
    queue: &[Vec<f64>],
    history: &[Vec<f64>],
    thresholds: &Thresholds,
) -> (StreamCharacteristics, DetectionStats) {
    let n = queue.len();
    let dim = queue.first().map_or(0, Vec::len);
    let mut center = vec![0.0; dim];
    for s in queue {
        for (c, v) in center.iter_mut().zip(s) {
            *c += v;
        }
    }
    if n > 0 {
        for c in &mut center {
            *c /= n as f64;
        }
    }
    let comparable: Vec<&Vec<f64>> = history.iter().filter(|h| h.len() == dim).collect();
    let delta2 = thresholds.dist_threshold * thresholds.dist_threshold;
    let (mut high_dim, mut outliers, mut variance) = (0, 0, 0.0);
    for (i, s) in queue.iter().enumerate() {
        if s.len() > thresholds.dim_threshold {
            high_dim += 1;
        }
        let d2 = squared_distance(s, &center);
        variance += (d2 - variance) / (i + 1) as f64;
        let far = !comparable.is_empty() && comparable.iter().all(|h| squared_distance(s, h) > delta2);
        if far {
            outliers += 1;
        }
    }
    let half = n as f64 / 2.0;
    let ch = StreamCharacteristics {
        high_dimension: high_dim as f64 > half,
        frequent_evolution: variance > thresholds.variance_threshold,
        many_outliers: outliers as f64 > half,
    };
    let stats = DetectionStats {
        samples: n,
        high_dim,
        variance,
        outliers,
        center,
    };
    (ch, stats)
}

/// The design choices for an objective under the given characteristics.
pub fn select(objective: Objective, ch: StreamCharacteristics) -> Kinds {
    match objective {
        Objective::Accuracy => {
            let structure = if ch.frequent_evolution {
                StructureKind::MCs
            } else {
                StructureKind::Cft
            };
            let (window, outlier) = if ch.many_outliers {
                (WindowKind::Landmark, OutlierKind::BufferTimer)
            } else if ch.high_dimension {
                (WindowKind::Damped, OutlierKind::Buffer)
            } else {
                (WindowKind::Damped, OutlierKind::BufferTimer)
            };
            Kinds::new(structure, window, outlier, RefineKind::Incremental)
        }
        Objective::Efficiency => {
            let (structure, window) = if ch.frequent_evolution {
                (StructureKind::Dpt, WindowKind::Landmark)
            } else {
                (StructureKind::Grids, WindowKind::Sliding)
            };
            Kinds::new(structure, window, OutlierKind::None, RefineKind::None)
        }
        Objective::Balance => {
            let structure = if ch.frequent_evolution {
                StructureKind::Cft
            } else {
                StructureKind::CoreT
            };
            Kinds::new(structure, WindowKind::Landmark, OutlierKind::Timer, RefineKind::OneShot)
        }
    }
}

/// Result of [`migrate`].
#[derive(Debug)]
pub struct Migration {
    pub structure: Box<dyn Summary>,
    /// False when the structure kind did not change and nothing happened.
    pub migrated: bool,
    /// What the efficiency path wrote to the output instead of carrying it.
    pub sunk: Option<ClusterSnapshot>,
}

/// Moves the clustering state to the structure kind of `new_cfg`.
///
/// Accuracy and balance transfer the old snapshot (and the old buffer's
/// outliers, when `old_outlier` was buffered) into the new structure.
/// Outliers are reseeded into the buffer if the new mechanism is buffered,
/// otherwise inserted with the centers. Efficiency sinks the old snapshot and
/// starts blank. An unchanged kind returns the old structure untouched.
pub fn migrate(
    objective: Objective,
    new_cfg: &Configuration,
    old: Box<dyn Summary>,
    old_outlier: OutlierKind,
    buffer: &mut OutlierBuffer,
) -> Result<Migration> {
    let kind = new_cfg.kinds.structure;
    if old.kind() == kind {
        return Ok(Migration {
            structure: old,
            migrated: false,
            sunk: None,
        });
    }
    let mut old = old;
    old.flush();
    let dim = old.dim();
    let mut snap = old.snapshot();
    match objective {
        Objective::Accuracy | Objective::Balance => {
            if old_outlier.is_buffered() && !new_cfg.kinds.outlier.is_buffered() {
                snap.centers.extend(buffer.snapshot_centers());
                buffer.clear();
            }
            let structure = init_from_snapshot(kind, dim, &snap, new_cfg)?;
            Ok(Migration {
                structure,
                migrated: true,
                sunk: None,
            })
        }
        Objective::Efficiency => {
            if !buffer.is_empty() {
                snap.outliers = Some(buffer.snapshot_centers());
                buffer.clear();
            }
            Ok(Migration {
                structure: build(kind, dim, new_cfg)?,
                migrated: true,
                sunk: Some(snap),
            })
        }
    }
}

/// One line of the reconfiguration log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconfigRecord {
    /// Points processed when detection fired.
    pub offset: u64,
    pub flags: StreamCharacteristics,
    pub old: Kinds,
    pub new: Kinds,
    pub migrated: bool,
    pub stats: DetectionStats,
}
