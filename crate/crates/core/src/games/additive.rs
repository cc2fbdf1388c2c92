use std::any::Any;

use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::{Game, Metric, MetricRange};

fn default_min() -> f64 {
    0.0
}

fn default_max() -> f64 {
    1.0
}

/// `metric(S) = clamp(base + Σ_{i∈S} w_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveGameSpec {
    pub base: f64,
    pub weights: Vec<f64>,
    #[serde(default = "default_min")]
    pub metric_min: f64,
    #[serde(default = "default_max")]
    pub metric_max: f64,
}

impl AdditiveGameSpec {
    pub fn new(base: f64, weights: Vec<f64>) -> Self {
        Self {
            base,
            weights,
            metric_min: 0.0,
            metric_max: 1.0,
        }
    }

    /// True when no coalition can push the metric out of range, so the
    /// Shapley value of player i is exactly `weights[i]`.
    pub fn is_clamp_free(&self) -> bool {
        let lo: f64 = self.base + self.weights.iter().map(|w| w.min(0.0)).sum::<f64>();
        let hi: f64 = self.base + self.weights.iter().map(|w| w.max(0.0)).sum::<f64>();
        lo >= self.metric_min && hi <= self.metric_max
    }
}

#[derive(Debug)]
pub struct AdditiveMetric {
    spec: AdditiveGameSpec,
    range: MetricRange,
}

impl Metric for AdditiveMetric {
    fn n_players(&self) -> usize {
        self.spec.weights.len()
    }

    fn metric_range(&self) -> MetricRange {
        self.range
    }

    fn raw_metric(&self, coalition: &Coalition) -> Result<f64> {
        let mut v = self.spec.base;
        for p in coalition.members() {
            v += self.spec.weights[p.0];
        }
        Ok(self.range.clamp(v))
    }

    fn descriptor(&self) -> String {
        format!("additive:{}", serde_json::to_string(&self.spec).unwrap_or_default())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub fn make_additive_game(spec: AdditiveGameSpec) -> Result<Game> {
    if spec.weights.is_empty() {
        return Err(Error::arg("additive game needs at least one weight"));
    }
    if !spec.base.is_finite() || spec.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::arg("additive game weights must be finite"));
    }
    let range = MetricRange::new(spec.metric_min, spec.metric_max)?;
    if !spec.is_clamp_free() {
        log::warn!("additive game is not clamp-free; metric will be clamped to [{}, {}]", range.min, range.max);
    }
    Game::new(AdditiveMetric { spec, range })
}
