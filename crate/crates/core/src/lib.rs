//! Shapley-value attribution and structured pruning for maskable components.
//!
//! Players are components that can be switched off (canonically attention
//! heads gated by `G_h ∈ {0, 1}`), and the characteristic function is a
//! validation metric adjusted so the empty coalition scores zero. The crate
//! provides:
//!
//! - [`game`]: the coalition/characteristic-function contract;
//! - [`games`]: oracle games, a planted multilingual family and a toy gated
//!   transformer;
//! - [`exact`]: brute-force Shapley values for small games;
//! - [`estimator`]: truncated Monte Carlo permutation sampling with
//!   empirical-Bernstein bandit stopping and resumable checkpoints;
//! - [`pruning`]: pruning decisions, baselines, curves, mask transfer and
//!   cross-language rank correlation;
//! - [`cli`]: the `coalition-prune` command line.

pub mod cli;
pub mod coalition;
pub mod error;
pub mod estimator;
pub mod exact;
pub mod game;
pub mod games;
pub mod io;
pub mod protocol;
pub mod pruning;
pub mod rng;
pub mod spec;

pub use coalition::{Coalition, HeadCoordinate, HeadLayout, PlayerId};
pub use error::{Error, Result};
pub use estimator::{
    bernstein_width, estimate, scan_permutation, update_stats, Checkpoint, ConvergenceReason, EstimateOutput,
    EstimatorConfig, Mode, PlayerStats, ShapleyEstimate,
};
pub use exact::{exact_shapley, exact_shapley_permutation_form, ExactShapleyResult};
pub use game::{FnMetric, Game, Metric, MetricRange};
pub use spec::GameSpec;
