use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Why a player stopped being sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceReason {
    LowerBoundPositive,
    UpperBoundNegative,
    BudgetExhausted,
    None,
}

impl ConvergenceReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ConvergenceReason::LowerBoundPositive => "lower_bound_positive",
            ConvergenceReason::UpperBoundNegative => "upper_bound_negative",
            ConvergenceReason::BudgetExhausted => "budget_exhausted",
            ConvergenceReason::None => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "lower_bound_positive" => ConvergenceReason::LowerBoundPositive,
            "upper_bound_negative" => ConvergenceReason::UpperBoundNegative,
            "budget_exhausted" => ConvergenceReason::BudgetExhausted,
            "none" => ConvergenceReason::None,
            other => return Err(Error::Format(format!("unknown convergence reason {other:?}"))),
        })
    }
}

/// Running moments of one player's observed marginals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerStats {
    pub t: u64,
    pub mean: f64,
    /// Sum of squared deviations from the running mean.
    pub m2: f64,
    pub converged: bool,
    pub reason: ConvergenceReason,
}

impl Default for PlayerStats {
    fn default() -> Self {
        Self {
            t: 0,
            mean: 0.0,
            m2: 0.0,
            converged: false,
            reason: ConvergenceReason::None,
        }
    }
}

impl PlayerStats {
    /// Population variance `m2 / t`; zero before the first sample.
    pub fn variance(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.m2 / self.t as f64
        }
    }
}

/// Welford single-pass update.
pub fn update_stats(stats: PlayerStats, marginal: f64) -> PlayerStats {
    let t = stats.t + 1;
    let d = marginal - stats.mean;
    let mean = stats.mean + d / t as f64;
    let m2 = stats.m2 + d * (marginal - mean);
    PlayerStats { t, mean, m2, ..stats }
}

/// Empirical Bernstein half-width
/// `σ_t·sqrt(2 ln(3/δ)/t) + 3 R ln(3/δ)/t` with `σ_t = sqrt(variance)`.
pub fn bernstein_width(variance: f64, t: u64, delta: f64, range_r: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::UndefinedWidth);
    }
    let log_term = (3.0 / delta).ln();
    let t = t as f64;
    Ok(variance.max(0.0).sqrt() * (2.0 * log_term / t).sqrt() + 3.0 * range_r * log_term / t)
}
