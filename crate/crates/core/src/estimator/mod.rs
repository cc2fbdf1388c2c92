//! Monte Carlo Shapley estimation with truncation and bandit stopping.
//!
//! Each permutation starts from the full coalition and removes the
//! not-yet-converged players in random order, recording for every removed
//! player `h` the marginal `V(A ∪ h) - V(A)`. With truncation the scan stops
//! before the coalition would drop below `ceil(fraction · N)` active
//! players. In `tmab` mode a player stops being sampled (and stays active in
//! every later coalition) once its empirical Bernstein interval excludes
//! zero.
//!
//! Permutations are processed in rounds of `batch_size` aligned on absolute
//! permutation indices. All permutations of a round are drawn over the
//! player set that was unconverged when the round began, scanned (possibly
//! concurrently), then merged in index order. Samples that reach a player
//! after it converged inside the round are discarded. Results therefore do
//! not depend on the worker count, and a run resumed from a checkpoint taken
//! on a round boundary matches an uninterrupted one.

mod checkpoint;
mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use checkpoint::Checkpoint;
pub use stats::{bernstein_width, update_stats, ConvergenceReason, PlayerStats};

use crate::coalition::PlayerId;
use crate::error::{Error, Result};
use crate::game::Game;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Full permutations, no stopping.
    PlainMc,
    /// Truncated permutations, no stopping.
    TruncatedMc,
    /// Truncated permutations plus per-player bandit stopping.
    Tmab,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::PlainMc => "plain_mc",
            Mode::TruncatedMc => "truncated_mc",
            Mode::Tmab => "tmab",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain_mc" => Ok(Mode::PlainMc),
            "truncated_mc" => Ok(Mode::TruncatedMc),
            "tmab" => Ok(Mode::Tmab),
            other => Err(Error::arg(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub delta: f64,
    pub range_r: f64,
    pub truncation_fraction: f64,
    pub max_permutations: u64,
    pub min_samples_per_player: u64,
    pub seed: u64,
    pub mode: Mode,
    /// Permutations per merge round.
    pub batch_size: u64,
    /// Scan workers; does not affect results.
    pub workers: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            range_r: 1.0,
            truncation_fraction: 0.5,
            max_permutations: 10_000,
            min_samples_per_player: 5,
            seed: 0,
            mode: Mode::Tmab,
            batch_size: 10,
            workers: 1,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::arg(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.range_r > 0.0 && self.range_r.is_finite()) {
            return Err(Error::arg(format!("range must be positive, got {}", self.range_r)));
        }
        if !(0.0..=1.0).contains(&self.truncation_fraction) {
            return Err(Error::arg(format!(
                "truncation fraction must lie in [0, 1], got {}",
                self.truncation_fraction
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::arg("batch_size must be >= 1"));
        }
        if self.workers == 0 {
            return Err(Error::arg("workers must be >= 1"));
        }
        Ok(())
    }

    /// Truncation actually applied; plain Monte Carlo never truncates.
    pub fn effective_truncation(&self) -> f64 {
        match self.mode {
            Mode::PlainMc => 0.0,
            _ => self.truncation_fraction,
        }
    }

    /// Digest over everything that shapes the sample trajectory, plus the
    /// game. The permutation budget and worker count are excluded so a run
    /// can be resumed with a larger budget.
    pub fn digest(&self, game: &Game) -> String {
        let payload = serde_json::json!({
            "delta": self.delta,
            "range_r": self.range_r,
            "truncation_fraction": self.effective_truncation(),
            "min_samples_per_player": self.min_samples_per_player,
            "seed": self.seed,
            "mode": self.mode,
            "batch_size": self.batch_size,
            "game": game.descriptor(),
        });
        let hash = Sha256::digest(payload.to_string().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Per-player estimate with its empirical Bernstein interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapleyEstimate {
    pub player: PlayerId,
    pub mean: f64,
    pub variance: f64,
    pub t: u64,
    pub lower: f64,
    pub upper: f64,
    pub converged: bool,
    pub reason: ConvergenceReason,
}

impl ShapleyEstimate {
    /// Bounds from `stats`; with no samples the interval is `mean ± R`.
    pub fn from_stats(player: PlayerId, stats: &PlayerStats, delta: f64, range_r: f64) -> Self {
        let variance = stats.variance();
        let width = bernstein_width(variance, stats.t, delta, range_r).unwrap_or(range_r);
        Self {
            player,
            mean: stats.mean,
            variance,
            t: stats.t,
            lower: stats.mean - width,
            upper: stats.mean + width,
            converged: stats.converged,
            reason: if stats.converged {
                stats.reason
            } else {
                ConvergenceReason::BudgetExhausted
            },
        }
    }
}

/// Marginals recorded by one permutation scan.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub marginals: Vec<(PlayerId, f64)>,
    pub evaluations: u64,
}

/// Number of removals a scan may make before fewer than
/// `ceil(fraction · n)` players would remain.
pub fn scan_length(n_players: usize, candidates: usize, truncation_fraction: f64) -> usize {
    let keep = (truncation_fraction.clamp(0.0, 1.0) * n_players as f64).ceil() as usize;
    n_players.saturating_sub(keep).min(candidates)
}

/// Removes `permutation` players one by one from the full coalition.
pub fn scan_permutation(game: &Game, permutation: &[PlayerId], truncation_fraction: f64) -> Result<Scan> {
    let n = game.n_players();
    let steps = scan_length(n, permutation.len(), truncation_fraction);
    let mut scan = Scan {
        marginals: Vec::with_capacity(steps),
        evaluations: 0,
    };
    if steps == 0 {
        return Ok(scan);
    }
    let mut coalition = game.grand_coalition();
    let mut value = game.evaluate_adjusted(&coalition)?;
    scan.evaluations += 1;
    for &p in &permutation[..steps] {
        coalition.remove(p)?;
        let next = game.evaluate_adjusted(&coalition)?;
        scan.evaluations += 1;
        scan.marginals.push((p, value - next));
        value = next;
    }
    Ok(scan)
}

#[derive(Debug, Clone)]
pub struct EstimateOutput {
    pub estimates: Vec<ShapleyEstimate>,
    /// Characteristic evaluations requested in this invocation, including
    /// the one shared baseline evaluation.
    pub evaluations_used: u64,
    pub permutations_completed: u64,
    /// Marginals clamped into `[-R, R]`.
    pub range_violations: u64,
    pub checkpoint: Checkpoint,
}

/// Receives checkpoints every `every` permutations, at the end of the run,
/// and before an evaluation failure is returned.
pub struct CheckpointSink<'a> {
    pub every: u64,
    pub write: &'a mut dyn FnMut(&Checkpoint) -> Result<()>,
}

pub fn estimate(game: &Game, config: &EstimatorConfig, checkpoint: Option<Checkpoint>) -> Result<EstimateOutput> {
    estimate_with_sink(game, config, checkpoint, None)
}

pub fn estimate_with_sink(
    game: &Game,
    config: &EstimatorConfig,
    checkpoint: Option<Checkpoint>,
    mut sink: Option<CheckpointSink<'_>>,
) -> Result<EstimateOutput> {
    config.validate()?;
    let n = game.n_players();
    let digest = config.digest(game);
    let (mut stats, mut completed) = match checkpoint {
        Some(c) => {
            c.check_compatible(&digest, config.seed, n)?;
            (c.players, c.permutations_completed)
        }
        None => (vec![PlayerStats::default(); n], 0),
    };
    let snapshot = |stats: &[PlayerStats], completed: u64| Checkpoint {
        config_digest: digest.clone(),
        seed: config.seed,
        permutations_completed: completed,
        players: stats.to_vec(),
    };

    let truncation = config.effective_truncation();
    let bandit = config.mode == Mode::Tmab;
    let pool = if config.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| Error::arg(format!("cannot build worker pool: {e}")))?,
        )
    } else {
        None
    };

    let mut evaluations = 1u64;
    let mut range_violations = 0u64;
    let mut last_saved = None;

    while completed < config.max_permutations {
        let active: Vec<PlayerId> = (0..n).filter(|&i| !stats[i].converged).map(PlayerId).collect();
        if active.is_empty() {
            break;
        }
        let round_end = ((completed / config.batch_size + 1) * config.batch_size).min(config.max_permutations);
        let run_one = |index: u64| -> Result<Scan> {
            let mut perm = active.clone();
            SplitMix64::keyed(config.seed, index).shuffle(&mut perm);
            scan_permutation(game, &perm, truncation).map_err(|e| Error::Permutation {
                index,
                source: Box::new(e),
            })
        };
        let scans: Vec<Result<Scan>> = match &pool {
            Some(pool) => pool.install(|| (completed..round_end).into_par_iter().map(run_one).collect()),
            None => (completed..round_end).map(run_one).collect(),
        };
        if let Some(pos) = scans.iter().position(Result::is_err) {
            if let Some(sink) = sink.as_mut() {
                (sink.write)(&snapshot(&stats, completed))?;
            }
            return Err(scans.into_iter().nth(pos).expect("position in range").unwrap_err());
        }
        for scan in scans.into_iter().map(|s| s.expect("checked above")) {
            evaluations += scan.evaluations;
            for (p, marginal) in scan.marginals {
                let s = &mut stats[p.0];
                if s.converged {
                    continue;
                }
                let clamped = marginal.clamp(-config.range_r, config.range_r);
                if clamped != marginal {
                    range_violations += 1;
                    log::warn!("marginal {marginal} of player {p} outside [-R, R]; clamped");
                }
                *s = update_stats(*s, clamped);
                if bandit && s.t >= config.min_samples_per_player {
                    let width = bernstein_width(s.variance(), s.t, config.delta, config.range_r)?;
                    if s.mean - width > 0.0 {
                        s.converged = true;
                        s.reason = ConvergenceReason::LowerBoundPositive;
                    } else if s.mean + width < 0.0 {
                        s.converged = true;
                        s.reason = ConvergenceReason::UpperBoundNegative;
                    }
                }
            }
        }
        completed = round_end;
        if let Some(sink) = sink.as_mut() {
            if sink.every > 0 && completed % sink.every == 0 {
                (sink.write)(&snapshot(&stats, completed))?;
                last_saved = Some(completed);
            }
        }
    }

    let checkpoint = snapshot(&stats, completed);
    if let Some(sink) = sink.as_mut() {
        if last_saved != Some(completed) {
            (sink.write)(&checkpoint)?;
        }
    }
    let estimates = stats
        .iter()
        .enumerate()
        .map(|(i, s)| ShapleyEstimate::from_stats(PlayerId(i), s, config.delta, config.range_r))
        .collect();
    Ok(EstimateOutput {
        estimates,
        evaluations_used: evaluations,
        permutations_completed: completed,
        range_violations,
        checkpoint,
    })
}
