//! Window models: landmark, damped and sliding.
//!
//! The window runs before each insertion. Landmark sinks and clears the
//! summary at every landmark, damped fades all weights, sliding subtracts the
//! contribution of the point that fell out of the window from whichever
//! cluster absorbed it.

use std::collections::{HashMap, VecDeque};

use crate::error::Result;
use crate::outlier::OutlierBuffer;
use crate::structures::Summary;
use crate::types::{ClusterFeature, ClusterId, ClusterSnapshot, Decay, StreamPoint, Thresholds, WindowKind};

/// Where a point's weight went when it was processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClusterRef {
    /// A holder in the summary built during `generation`.
    Structure { generation: u64, holder: ClusterId },
    /// A cluster in the outlier buffer.
    Buffer(ClusterId),
    /// Discarded as an outlier.
    Nowhere,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WindowAction {
    None,
    /// The landmark was passed: this is what the summary held.
    Sunk(ClusterSnapshot),
    Decayed,
    /// The oldest point was subtracted from its cluster.
    Expired,
    /// The oldest point's cluster no longer exists.
    ExpiryDropped,
}

#[derive(Debug, Clone)]
pub struct WindowState {
    kind: WindowKind,
    counter: u64,
    landmark: u64,
    period: u64,
    ws: usize,
    decay: Decay,
    fifo: VecDeque<(ClusterFeature, ClusterRef)>,
    redirects: HashMap<ClusterRef, ClusterRef>,
    dropped: u64,
}

impl WindowState {
    pub fn new(kind: WindowKind, thresholds: &Thresholds) -> Self {
        WindowState {
            kind,
            counter: 0,
            landmark: thresholds.landmark_period as u64,
            period: thresholds.landmark_period as u64,
            ws: thresholds.sliding_size,
            decay: thresholds.decay,
            fifo: VecDeque::new(),
            redirects: HashMap::new(),
            dropped: 0,
        }
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    /// Points seen so far in this run.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn landmark(&self) -> u64 {
        self.landmark
    }

    pub fn fifo_len(&self) -> usize {
        self.fifo.len()
    }

    /// Sliding removals whose cluster had already disappeared.
    pub fn dropped_removals(&self) -> u64 {
        self.dropped
    }

    /// Switches the window model, dropping model-specific state. The next
    /// landmark is one full period after the switch.
    pub fn switch(&mut self, kind: WindowKind) {
        self.kind = kind;
        self.fifo.clear();
        self.redirects.clear();
        self.landmark = self.counter + self.period;
    }

    /// Weight an arriving point enters the summary with.
    pub fn initial_weight(&self, w: f64) -> f64 {
        match self.kind {
            WindowKind::Damped => self.decay.alpha * w,
            _ => w,
        }
    }

    /// Advances the counter and applies the window model before `p` is
    /// inserted.
    pub fn step(
        &mut self,
        structure: &mut dyn Summary,
        buffer: &mut OutlierBuffer,
        generation: u64,
        p: &StreamPoint,
    ) -> Result<WindowAction> {
        self.counter += 1;
        match self.kind {
            WindowKind::Landmark => {
                if self.counter <= self.landmark {
                    return Ok(WindowAction::None);
                }
                structure.flush();
                let mut snap = structure.snapshot();
                let outliers = buffer.snapshot_centers();
                if !outliers.is_empty() {
                    snap.outliers = Some(outliers);
                }
                structure.clear();
                buffer.clear();
                self.landmark += self.period;
                Ok(WindowAction::Sunk(snap))
            }
            WindowKind::Damped => {
                structure.decay_all(p.timestamp, &self.decay);
                Ok(WindowAction::Decayed)
            }
            WindowKind::Sliding => {
                if self.counter as usize <= self.ws || self.fifo.len() < self.ws {
                    return Ok(WindowAction::None);
                }
                let (cf, at) = self.fifo.pop_front().expect("window is full");
                let removed = match self.resolve(at) {
                    ClusterRef::Structure { generation: g, holder } if g == generation => {
                        structure.subtract(holder, &cf)?
                    }
                    ClusterRef::Structure { .. } => false,
                    ClusterRef::Buffer(id) => buffer.subtract(id, &cf)?,
                    ClusterRef::Nowhere => return Ok(WindowAction::None),
                };
                if self.fifo.is_empty() {
                    self.redirects.clear();
                }
                if removed {
                    Ok(WindowAction::Expired)
                } else {
                    self.dropped += 1;
                    Ok(WindowAction::ExpiryDropped)
                }
            }
        }
    }

    /// Remembers where `p` went, for later expiry. Only the sliding model
    /// keeps this record.
    pub fn record(&mut self, p: &StreamPoint, weight: f64, at: ClusterRef) {
        if self.kind == WindowKind::Sliding {
            let mut cf = ClusterFeature::singleton(p);
            cf.scale(weight / p.weight);
            cf.last_update = p.timestamp;
            self.fifo.push_back((cf, at));
        }
    }

    /// Points recorded against `from` now live in `to` (buffer promotion or
    /// demotion).
    pub fn relink(&mut self, from: ClusterRef, to: ClusterRef) {
        if self.kind == WindowKind::Sliding && from != to {
            self.redirects.insert(from, to);
        }
    }

    fn resolve(&self, mut at: ClusterRef) -> ClusterRef {
        while let Some(&next) = self.redirects.get(&at) {
            at = next;
        }
        at
    }
}
