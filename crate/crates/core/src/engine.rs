//! The online clustering loop: detection, selection, migration, window,
//! outlier handling, insertion and refinement, one point at a time.

use serde::{Deserialize, Serialize};

use crate::controller::{migrate, select, DetectionQueue, ReconfigRecord};
use crate::error::{check_dim, Error, Result};
use crate::outlier::{outlier_step, regular_check, OutlierBuffer};
use crate::refine::refine;
use crate::structures::{build, init_from_snapshot, Summary};
use crate::types::{
    ClusterFeature, ClusterId, ClusterSnapshot, Configuration, Kinds, Objective, OutlierKind, RefineKind,
    StreamCharacteristics, StreamPoint, OUTLIER_LABEL,
};
use crate::window::{ClusterRef, WindowAction, WindowState};

/// How the engine picks its design choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Detect stream characteristics and reselect for this objective.
    SelfOptimizing(Objective),
    /// Run one combination for the whole stream.
    Fixed(Kinds),
}

/// Ablation switches for self-optimizing runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineOptions {
    /// Keep the initial combination; detection still runs and is logged.
    pub no_selection: bool,
    /// Start a blank structure on a structure change instead of carrying
    /// the old clusters over.
    pub no_migration: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SinkReason {
    Landmark,
    Migration,
    DimensionChange,
}

/// Clustering results written to the output before the structure was
/// cleared or replaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinkRecord {
    pub offset: u64,
    pub reason: SinkReason,
    pub snapshot: ClusterSnapshot,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EngineStats {
    pub points: u64,
    pub inserted: u64,
    pub outliers: u64,
    pub promotions: u64,
    pub demotions: u64,
    pub removals: u64,
    pub purged: u64,
    pub expired: u64,
    pub dropped_removals: u64,
    pub sinks: u64,
    pub detections: u64,
    pub migrations: u64,
    pub refinements: u64,
    pub dimension_changes: u64,
    pub buffer_evictions: u64,
}

/// Everything an engine leaves behind at the end of a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineOutput {
    pub final_kinds: Kinds,
    pub final_snapshot: ClusterSnapshot,
    pub sinks: Vec<SinkRecord>,
    pub reconfigs: Vec<ReconfigRecord>,
    pub stats: EngineStats,
    pub warnings: Vec<String>,
}

const LOCAL_BITS: u32 = 40;

/// Stream-wide cluster id: the structure generation in the high bits and the
/// structure-local id in the low bits.
pub fn global_cluster_id(generation: u64, local: ClusterId) -> i64 {
    ((generation << LOCAL_BITS) | (local & ((1 << LOCAL_BITS) - 1))) as i64
}

#[derive(Debug)]
pub struct Engine {
    mode: Mode,
    options: EngineOptions,
    cfg: Configuration,
    structure: Option<Box<dyn Summary>>,
    generation: u64,
    window: WindowState,
    buffer: OutlierBuffer,
    queue: DetectionQueue,
    reconfigs: Vec<ReconfigRecord>,
    sinks: Vec<SinkRecord>,
    stats: EngineStats,
    warnings: Vec<String>,
}

impl Engine {
    /// `cfg` carries every parameter; its kinds are replaced by the mode's
    /// initial choice (for self-optimizing runs, the selection for all-false
    /// characteristics).
    pub fn new(mode: Mode, cfg: Configuration, options: EngineOptions) -> Result<Self> {
        let kinds = match mode {
            Mode::SelfOptimizing(objective) => select(objective, StreamCharacteristics::default()),
            Mode::Fixed(kinds) => kinds,
        };
        let cfg = cfg.with_kinds(kinds);
        cfg.validate()?;
        Ok(Engine {
            mode,
            options,
            window: WindowState::new(kinds.window, &cfg.thresholds),
            buffer: OutlierBuffer::new(cfg.outlier.buffer_capacity, cfg.buffer_radius()),
            queue: DetectionQueue::new(cfg.thresholds.queue_capacity),
            cfg,
            structure: None,
            generation: 0,
            reconfigs: Vec::new(),
            sinks: Vec::new(),
            stats: EngineStats::default(),
            warnings: Vec::new(),
        })
    }

    pub fn config(&self) -> &Configuration {
        &self.cfg
    }

    pub fn kinds(&self) -> Kinds {
        self.cfg.kinds
    }

    pub fn structure(&self) -> Option<&dyn Summary> {
        self.structure.as_deref()
    }

    pub fn buffer(&self) -> &OutlierBuffer {
        &self.buffer
    }

    pub fn window(&self) -> &WindowState {
        &self.window
    }

    pub fn reconfigs(&self) -> &[ReconfigRecord] {
        &self.reconfigs
    }

    pub fn sinks(&self) -> &[SinkRecord] {
        &self.sinks
    }

    pub fn stats(&self) -> &EngineStats {
        &self.stats
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Current clusters plus buffered outliers.
    pub fn snapshot(&self) -> ClusterSnapshot {
        let mut snap = self.structure.as_ref().map(|s| s.snapshot()).unwrap_or_default();
        if !self.buffer.is_empty() {
            snap.outliers = Some(self.buffer.snapshot_centers());
        }
        snap
    }

    fn sink(&mut self, reason: SinkReason, snapshot: ClusterSnapshot) {
        self.stats.sinks += 1;
        self.sinks.push(SinkRecord {
            offset: self.stats.points,
            reason,
            snapshot,
        });
    }

    /// Processes one point and returns its cluster label: a stream-wide
    /// cluster id, or [`OUTLIER_LABEL`] when the point was held back as an
    /// outlier.
    pub fn process(&mut self, p: &StreamPoint) -> Result<i64> {
        if p.dim() == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if !(p.weight > 0.0) {
            return Err(Error::config(format!("point {} has non-positive weight", p.id)));
        }
        self.stats.points += 1;
        self.ensure_structure(p.dim())?;

        if let Mode::SelfOptimizing(objective) = self.mode {
            if self.queue.push(&p.values) {
                self.reconfigure(objective)?;
            }
        }

        let structure = self.structure.as_deref_mut().expect("built above");
        match self.window.step(structure, &mut self.buffer, self.generation, p)? {
            WindowAction::Sunk(snap) => {
                self.generation += 1;
                self.sink(SinkReason::Landmark, snap);
            }
            WindowAction::Expired => self.stats.expired += 1,
            WindowAction::ExpiryDropped => self.stats.dropped_removals += 1,
            WindowAction::None | WindowAction::Decayed => {}
        }

        let weight = self.window.initial_weight(p.weight);
        let mech = self.cfg.kinds.outlier;
        let mut verdict = None;
        if mech != OutlierKind::None {
            let structure = self.structure.as_deref_mut().expect("built above");
            let v = outlier_step(
                mech,
                p,
                weight,
                structure,
                &mut self.buffer,
                self.cfg.thresholds.outlier_delta(),
                self.cfg.thresholds.density_threshold,
            )?;
            if let (Some(bid), Some(a)) = (v.buffered, v.promoted) {
                self.stats.promotions += 1;
                self.window.relink(
                    ClusterRef::Buffer(bid),
                    ClusterRef::Structure {
                        generation: self.generation,
                        holder: a.holder,
                    },
                );
            }
            if self
                .window
                .counter()
                .is_multiple_of(self.cfg.outlier.check_period as u64)
            {
                self.run_regular_check(p.timestamp)?;
            }
            verdict = Some(v);
        }

        let label = match verdict {
            Some(v) if v.is_outlier => {
                self.stats.outliers += 1;
                let at = v.buffered.map_or(ClusterRef::Nowhere, ClusterRef::Buffer);
                self.window.record(p, weight, at);
                OUTLIER_LABEL
            }
            _ => {
                let mut cf = ClusterFeature::singleton(p);
                cf.scale(weight / p.weight);
                cf.last_update = p.timestamp;
                let structure = self.structure.as_deref_mut().expect("built above");
                let a = structure.insert_cf(cf)?;
                self.stats.inserted += 1;
                self.window.record(
                    p,
                    weight,
                    ClusterRef::Structure {
                        generation: self.generation,
                        holder: a.holder,
                    },
                );
                global_cluster_id(self.generation, a.cluster)
            }
        };

        if self.cfg.kinds.refine == RefineKind::Incremental
            && self
                .window
                .counter()
                .is_multiple_of(self.cfg.incremental_period() as u64)
        {
            self.refine_in_place()?;
        }
        self.stats.buffer_evictions = self.buffer.evictions();
        Ok(label)
    }

    fn ensure_structure(&mut self, dim: usize) -> Result<()> {
        match &mut self.structure {
            None => {
                self.structure = Some(build(self.cfg.kinds.structure, dim, &self.cfg)?);
            }
            Some(s) if s.dim() != dim => {
                s.flush();
                let snap = self.snapshot();
                self.sink(SinkReason::DimensionChange, snap);
                self.structure = Some(build(self.cfg.kinds.structure, dim, &self.cfg)?);
                self.buffer.clear();
                self.queue.reset();
                self.window.switch(self.window.kind());
                self.generation += 1;
                self.stats.dimension_changes += 1;
            }
            Some(_) => {}
        }
        Ok(())
    }

    fn run_regular_check(&mut self, now: u64) -> Result<()> {
        let structure = self.structure.as_deref_mut().expect("built");
        let report = regular_check(
            self.cfg.kinds.outlier,
            structure,
            &mut self.buffer,
            self.cfg.thresholds.density_threshold,
            self.cfg.thresholds.timer_threshold,
            now,
        )?;
        for &(sid, bid) in &report.demoted {
            self.window.relink(
                ClusterRef::Structure {
                    generation: self.generation,
                    holder: sid,
                },
                ClusterRef::Buffer(bid),
            );
        }
        self.stats.demotions += report.demoted.len() as u64;
        self.stats.removals += report.removed.len() as u64;
        self.stats.purged += report.purged.len() as u64;
        Ok(())
    }

    fn reconfigure(&mut self, objective: Objective) -> Result<()> {
        let (flags, stats) = self.queue.detect(&self.cfg.thresholds);
        self.stats.detections += 1;
        let old = self.cfg.kinds;
        let new = if self.options.no_selection {
            old
        } else {
            select(objective, flags)
        };
        let migrated = self.apply_kinds(objective, new)?;
        self.reconfigs.push(ReconfigRecord {
            offset: self.stats.points,
            flags,
            old,
            new,
            migrated,
            stats,
        });
        Ok(())
    }

    /// Switches to `new`, migrating the structure if its kind changed.
    /// Returns whether the structure was replaced.
    fn apply_kinds(&mut self, objective: Objective, new: Kinds) -> Result<bool> {
        let old = self.cfg.kinds;
        let new_cfg = self.cfg.with_kinds(new);
        new_cfg.validate()?;
        let mut replaced = false;
        if new.structure != old.structure {
            let mut current = self.structure.take().expect("built before detection");
            if self.options.no_migration {
                current.flush();
                let mut snap = current.snapshot();
                if old.outlier.is_buffered() && !new.outlier.is_buffered() && !self.buffer.is_empty() {
                    snap.outliers = Some(self.buffer.snapshot_centers());
                    self.buffer.clear();
                }
                self.sink(SinkReason::Migration, snap);
                self.structure = Some(build(new.structure, current.dim(), &new_cfg)?);
            } else {
                let m = migrate(objective, &new_cfg, current, old.outlier, &mut self.buffer)?;
                if let Some(snap) = m.sunk {
                    self.sink(SinkReason::Migration, snap);
                }
                self.structure = Some(m.structure);
            }
            self.generation += 1;
            self.stats.migrations += 1;
            replaced = true;
        }
        if old.outlier.is_buffered() && !new.outlier.is_buffered() && !self.buffer.is_empty() {
            let snap = ClusterSnapshot {
                centers: Vec::new(),
                outliers: Some(self.buffer.snapshot_centers()),
            };
            self.buffer.clear();
            self.sink(SinkReason::Migration, snap);
        }
        if new.window != old.window {
            self.window.switch(new.window);
        }
        self.cfg = new_cfg;
        Ok(replaced)
    }

    /// Replaces the structure with one rebuilt from its refined snapshot.
    fn refine_in_place(&mut self) -> Result<ClusterSnapshot> {
        let s = self.structure.as_deref_mut().expect("built");
        s.flush();
        let dim = s.dim();
        let snap = s.snapshot();
        let seed = self.cfg.seed ^ self.stats.refinements.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let refined = refine(&snap, &self.cfg.refine, self.cfg.k_hint, seed)?;
        if let Some(w) = refined.warning {
            self.warnings
                .push(format!("refinement at point {}: {w}", self.stats.points));
        }
        for c in &refined.snapshot.centers {
            check_dim(dim, c.centroid.len())?;
        }
        let centers = ClusterSnapshot::new(refined.snapshot.centers.clone());
        self.structure = Some(init_from_snapshot(self.cfg.kinds.structure, dim, &centers, &self.cfg)?);
        self.generation += 1;
        self.stats.refinements += 1;
        Ok(refined.snapshot)
    }

    /// Ends the stream: applies one-shot refinement if configured and
    /// returns the final results.
    pub fn finish(mut self) -> Result<EngineOutput> {
        let final_snapshot = match self.structure.as_deref_mut() {
            None => ClusterSnapshot::default(),
            Some(s) => {
                s.flush();
                if self.cfg.kinds.refine == RefineKind::OneShot {
                    let mut snap = self.refine_in_place()?;
                    if !self.buffer.is_empty() {
                        snap.outliers
                            .get_or_insert_with(Vec::new)
                            .extend(self.buffer.snapshot_centers());
                    }
                    snap
                } else {
                    self.snapshot()
                }
            }
        };
        self.stats.buffer_evictions = self.buffer.evictions();
        Ok(EngineOutput {
            final_kinds: self.cfg.kinds,
            final_snapshot,
            sinks: self.sinks,
            reconfigs: self.reconfigs,
            stats: self.stats,
            warnings: self.warnings,
        })
    }
}
