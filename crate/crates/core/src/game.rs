//! The adjusted characteristic-function contract shared by every game and solver.
//!
//! A [`Metric`] maps a coalition of active players to a raw evaluation
//! metric (accuracy, say). [`Game`] wraps a metric, caches the metric of the
//! empty coalition, and exposes the adjusted value
//! `V(S) = metric(S) - metric(∅)`, so `V(∅) = 0` holds exactly.

use std::any::Any;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::coalition::{Coalition, HeadLayout};
use crate::error::{Error, Result};

/// Default memoization budget (entries).
pub const DEFAULT_CACHE_BUDGET: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRange {
    pub min: f64,
    pub max: f64,
}

impl MetricRange {
    pub const UNIT: MetricRange = MetricRange { min: 0.0, max: 1.0 };

    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::arg(format!("invalid metric range [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }
}

impl Default for MetricRange {
    fn default() -> Self {
        Self::UNIT
    }
}

/// A raw evaluation metric over coalitions.
///
/// Implementations must be deterministic: equal coalitions give bit-identical
/// values. They are shared across worker threads.
pub trait Metric: Send + Sync + 'static {
    fn n_players(&self) -> usize;

    fn metric_range(&self) -> MetricRange {
        MetricRange::UNIT
    }

    fn raw_metric(&self, coalition: &Coalition) -> Result<f64>;

    /// Stable description used to fingerprint checkpoints.
    fn descriptor(&self) -> String;

    fn head_layout(&self) -> HeadLayout {
        HeadLayout::new(self.n_players().max(1))
    }

    fn as_any(&self) -> &dyn Any;
}

pub struct Game {
    metric: Arc<dyn Metric>,
    range: MetricRange,
    baseline: f64,
    cache: Mutex<HashMap<Coalition, f64>>,
    cache_budget: usize,
    raw_evaluations: AtomicU64,
}

impl std::fmt::Debug for Game {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Game")
            .field("descriptor", &self.metric.descriptor())
            .field("n_players", &self.n_players())
            .field("baseline", &self.baseline)
            .finish()
    }
}

impl Game {
    /// Wraps `metric`, evaluating the empty coalition once up front.
    pub fn new(metric: impl Metric) -> Result<Self> {
        Self::with_cache_budget(Arc::new(metric), DEFAULT_CACHE_BUDGET)
    }

    pub fn with_cache_budget(metric: Arc<dyn Metric>, cache_budget: usize) -> Result<Self> {
        let range = metric.metric_range();
        let mut game = Self {
            metric,
            range,
            baseline: 0.0,
            cache: Mutex::new(HashMap::new()),
            cache_budget,
            raw_evaluations: AtomicU64::new(0),
        };
        game.baseline = game.raw_metric(&Coalition::empty(game.n_players()))?;
        Ok(game)
    }

    pub fn n_players(&self) -> usize {
        self.metric.n_players()
    }

    pub fn metric_range(&self) -> MetricRange {
        self.range
    }

    /// Cached raw metric of the empty coalition.
    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn descriptor(&self) -> String {
        self.metric.descriptor()
    }

    pub fn head_layout(&self) -> HeadLayout {
        self.metric.head_layout()
    }

    pub fn metric(&self) -> &dyn Metric {
        self.metric.as_ref()
    }

    /// Downcast the underlying metric, e.g. to reach a transformer model.
    pub fn metric_as<T: 'static>(&self) -> Option<&T> {
        self.metric.as_any().downcast_ref::<T>()
    }

    /// Number of uncached calls into the underlying metric so far.
    pub fn raw_evaluations(&self) -> u64 {
        self.raw_evaluations.load(Ordering::Relaxed)
    }

    fn check_width(&self, coalition: &Coalition) -> Result<()> {
        if coalition.width() != self.n_players() {
            return Err(Error::arg(format!(
                "coalition width {} does not match game with {} players",
                coalition.width(),
                self.n_players()
            )));
        }
        Ok(())
    }

    /// Raw metric, memoized and range-checked.
    pub fn raw_metric(&self, coalition: &Coalition) -> Result<f64> {
        self.check_width(coalition)?;
        if let Some(v) = self.cache.lock().expect("cache poisoned").get(coalition) {
            return Ok(*v);
        }
        self.raw_evaluations.fetch_add(1, Ordering::Relaxed);
        let value = self.metric.raw_metric(coalition)?;
        if !self.range.contains(value) {
            return Err(Error::ContractViolation {
                value,
                min: self.range.min,
                max: self.range.max,
            });
        }
        let mut cache = self.cache.lock().expect("cache poisoned");
        if cache.len() < self.cache_budget {
            cache.insert(coalition.clone(), value);
        }
        Ok(value)
    }

    /// `V(S) = metric(S) - metric(∅)`; exactly 0 for the empty coalition.
    pub fn evaluate_adjusted(&self, coalition: &Coalition) -> Result<f64> {
        self.check_width(coalition)?;
        if coalition.is_empty() {
            return Ok(0.0);
        }
        Ok(self.raw_metric(coalition)? - self.baseline)
    }

    pub fn grand_value(&self) -> Result<f64> {
        self.evaluate_adjusted(&Coalition::grand(self.n_players()))
    }

    pub fn grand_coalition(&self) -> Coalition {
        Coalition::grand(self.n_players())
    }
}

/// Metric backed by a closure; handy for tests and ad-hoc games.
pub struct FnMetric<F> {
    n_players: usize,
    range: MetricRange,
    name: String,
    f: F,
}

impl<F> FnMetric<F>
where
    F: Fn(&Coalition) -> f64 + Send + Sync + 'static,
{
    pub fn new(name: impl Into<String>, n_players: usize, range: MetricRange, f: F) -> Self {
        Self {
            n_players,
            range,
            name: name.into(),
            f,
        }
    }
}

impl<F> Metric for FnMetric<F>
where
    F: Fn(&Coalition) -> f64 + Send + Sync + 'static,
{
    fn n_players(&self) -> usize {
        self.n_players
    }

    fn metric_range(&self) -> MetricRange {
        self.range
    }

    fn raw_metric(&self, coalition: &Coalition) -> Result<f64> {
        Ok((self.f)(coalition))
    }

    fn descriptor(&self) -> String {
        format!("fn:{}:{}", self.name, self.n_players)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
