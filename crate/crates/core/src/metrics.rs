//! Purity and throughput.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of points that carry the majority label of their cluster.
/// Each item is `(true label, assigned cluster)`.
pub fn purity(assignments: &[(i64, i64)]) -> Result<f64> {
    if assignments.is_empty() {
        return Err(Error::EmptyInput("purity of an empty assignment list"));
    }
    let mut counts: HashMap<i64, HashMap<i64, usize>> = HashMap::new();
    for &(label, cluster) in assignments {
        *counts.entry(cluster).or_default().entry(label).or_default() += 1;
    }
    let hits: usize = counts
        .values()
        .map(|by_label| by_label.values().copied().max().unwrap_or(0))
        .sum();
    Ok(hits as f64 / assignments.len() as f64)
}

/// Points per second of consumer time.
pub fn throughput(points: u64, consumer_seconds: f64) -> Result<f64> {
    if !(consumer_seconds > 0.0) {
        return Err(Error::ZeroElapsed(consumer_seconds));
    }
    Ok(points as f64 / consumer_seconds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPurity {
    pub index: usize,
    /// Labeled points in the window.
    pub population: usize,
    pub purity: f64,
}

/// Purity over consecutive windows of `window_size` stream positions.
/// Unlabeled points take up positions but are not scored; windows without
/// any labeled point are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuritySeries {
    pub window_size: usize,
    pub windows: Vec<WindowPurity>,
    /// Mean of the window values weighted by population.
    pub global: Option<f64>,
}

impl PuritySeries {
    pub fn values(&self) -> Vec<f64> {
        self.windows.iter().map(|w| w.purity).collect()
    }

    /// Unweighted mean of the window values.
    pub fn mean(&self) -> Option<f64> {
        (!self.windows.is_empty())
            .then(|| self.windows.iter().map(|w| w.purity).sum::<f64>() / self.windows.len() as f64)
    }

    /// Recomputes a series from a full assignment log of
    /// `(label, cluster)` in stream order.
    pub fn from_log(window_size: usize, log: &[(Option<i64>, i64)]) -> Self {
        let mut b = PurityBuilder::new(window_size);
        for &(label, cluster) in log {
            b.push(label, cluster);
        }
        b.finish()
    }
}

/// Incremental construction of a [`PuritySeries`].
#[derive(Debug, Clone)]
pub struct PurityBuilder {
    window_size: usize,
    position: usize,
    current: Vec<(i64, i64)>,
    windows: Vec<WindowPurity>,
}

impl PurityBuilder {
    pub fn new(window_size: usize) -> Self {
        PurityBuilder {
            window_size: window_size.max(1),
            position: 0,
            current: Vec::new(),
            windows: Vec::new(),
        }
    }

    pub fn push(&mut self, label: Option<i64>, cluster: i64) {
        if let Some(label) = label {
            self.current.push((label, cluster));
        }
        self.position += 1;
        if self.position.is_multiple_of(self.window_size) {
            self.close(self.position / self.window_size - 1);
        }
    }

    fn close(&mut self, index: usize) {
        if let Ok(p) = purity(&self.current) {
            self.windows.push(WindowPurity {
                index,
                population: self.current.len(),
                purity: p,
            });
        }
        self.current.clear();
    }

    pub fn finish(mut self) -> PuritySeries {
        if !self.position.is_multiple_of(self.window_size) {
            self.close(self.position / self.window_size);
        }
        let total: usize = self.windows.iter().map(|w| w.population).sum();
        let global = (total > 0)
            .then(|| self.windows.iter().map(|w| w.purity * w.population as f64).sum::<f64>() / total as f64);
        PuritySeries {
            window_size: self.window_size,
            windows: self.windows,
            global,
        }
    }
}
