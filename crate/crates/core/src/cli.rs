//! `coalition-prune` command line.
//!
//! Exit codes: 0 success, 2 usage or spec error, 3 external evaluator failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{estimate_with_sink, Checkpoint, CheckpointSink, EstimatorConfig};
use crate::exact::exact_shapley;
use crate::game::Game;
use crate::games::ExternalGame;
use crate::io;
use crate::pruning::{
    correlation_matrix, gradient_importance, iterative_curve, prune_by_rule, random_curve, PruneRule, RankingSource,
};
use crate::spec::GameSpec;

pub const SEED_ENV: &str = "COALITION_PRUNE_SEED";
pub const CHECKPOINT_EVERY: u64 = 50;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_EVALUATOR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "coalition-prune", version, about = "Shapley-value attribution and pruning of maskable components")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact Shapley values by enumeration.
    Exact {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo estimation (plain, truncated, or truncated + bandit).
    Estimate {
        #[arg(long)]
        game: PathBuf,
        #[command(flatten)]
        est: EstimateArgs,
    },
    /// Prune from an estimates file and report the metric change.
    Prune {
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long)]
        game: PathBuf,
        #[arg(long, default_value = "upper")]
        rule: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Iterative pruning curves for one or more rankings.
    Curve {
        #[arg(long)]
        game: PathBuf,
        /// `shapley:FILE.csv`, `gradient` or `random`; repeatable.
        #[arg(long, required = true)]
        ranking: Vec<String>,
        /// Random draws per sparsity level.
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spearman correlation matrix across estimate files.
    Correlate {
        #[arg(long, num_args = 2.., required = true)]
        estimates: Vec<PathBuf>,
        #[arg(long, num_args = 2.., required = true)]
        labels: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate against an external evaluator process.
    RunExternal {
        #[arg(long)]
        cmd: String,
        /// Seconds to wait for the handshake and each response.
        #[arg(long, default_value_t = 60)]
        timeout: u64,
        #[command(flatten)]
        est: EstimateArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long, default_value = "tmab")]
    pub mode: String,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub range: f64,
    #[arg(long, default_value_t = 0.5)]
    pub truncation: f64,
    #[arg(long = "max-perms", default_value_t = 10_000)]
    pub max_perms: u64,
    #[arg(long = "min-samples", default_value_t = 5)]
    pub min_samples: u64,
    #[arg(long = "batch-size", default_value_t = 10)]
    pub batch_size: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

impl EstimateArgs {
    fn config(&self) -> Result<EstimatorConfig> {
        let seed = match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::arg(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?,
            Err(_) => self.seed,
        };
        let config = EstimatorConfig {
            delta: self.delta,
            range_r: self.range,
            truncation_fraction: self.truncation,
            max_permutations: self.max_perms,
            min_samples_per_player: self.min_samples,
            seed,
            mode: self.mode.parse()?,
            batch_size: self.batch_size,
            workers: self.workers,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    game_spec: Option<serde_json::Value>,
    estimator_config: Option<&'a EstimatorConfig>,
    outputs: Vec<String>,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    evaluations_used: u64,
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(OsString::from).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

struct RunRecord<'a> {
    command: &'a str,
    game_spec: Option<serde_json::Value>,
    config: Option<&'a EstimatorConfig>,
    started: u128,
}

impl RunRecord<'_> {
    fn finish(self, out: &Path, evaluations_used: u64) -> Result<()> {
        let manifest = Manifest {
            command: self.command,
            game_spec: self.game_spec,
            estimator_config: self.config,
            outputs: vec![out.display().to_string()],
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
            evaluations_used,
        };
        io::write_string_atomic(&manifest_path(out), &serde_json::to_string_pretty(&manifest)?)
    }
}

fn load_game(path: &Path) -> Result<(GameSpec, Game)> {
    let spec = GameSpec::from_file(path)?;
    let game = spec.build()?;
    Ok((spec, game))
}

fn run_estimate(
    command: &str,
    spec_json: serde_json::Value,
    game: &Game,
    args: &EstimateArgs,
    force_single_worker: bool,
) -> Result<()> {
    let started = now_ms();
    let mut config = args.config()?;
    if force_single_worker && config.workers != 1 {
        log::warn!("external evaluators run with a single worker");
        config.workers = 1;
    }
    let resume = match &args.checkpoint {
        Some(p) if p.exists() => Some(Checkpoint::load(p)?),
        _ => None,
    };
    let output = match &args.checkpoint {
        Some(path) => {
            let mut write = |c: &Checkpoint| c.save(path);
            let sink = CheckpointSink {
                every: CHECKPOINT_EVERY,
                write: &mut write,
            };
            estimate_with_sink(game, &config, resume, Some(sink))?
        }
        None => estimate_with_sink(game, &config, resume, None)?,
    };
    if output.range_violations > 0 {
        log::warn!("{} marginals were clamped into [-R, R]", output.range_violations);
    }
    let csv = io::estimates_csv(&output.estimates, game.head_layout())?;
    io::write_string_atomic(&args.out, &csv)?;
    RunRecord {
        command,
        game_spec: Some(spec_json),
        config: Some(&config),
        started,
    }
    .finish(&args.out, output.evaluations_used)
}

fn parse_ranking(arg: &str, game: &Game, epsilon: f64) -> Result<Option<RankingSource>> {
    match arg.split_once(':') {
        Some(("shapley", file)) => {
            let estimates = io::read_estimates_csv(&std::fs::read_to_string(file)?)?;
            if estimates.len() != game.n_players() {
                return Err(Error::arg(format!(
                    "{file} has {} players, game has {}",
                    estimates.len(),
                    game.n_players()
                )));
            }
            Ok(Some(RankingSource::shapley(&estimates)))
        }
        None if arg == "gradient" => Ok(Some(gradient_importance(game, epsilon)?)),
        None if arg == "random" => Ok(None),
        _ => Err(Error::arg(format!("unrecognized ranking {arg:?}"))),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Exact { game, out } => {
            let started = now_ms();
            let (spec, game) = load_game(&game)?;
            let result = exact_shapley(&game)?;
            io::write_string_atomic(&out, &io::exact_csv(&result.values, game.head_layout())?)?;
            RunRecord {
                command: "exact",
                game_spec: Some(serde_json::to_value(&spec)?),
                config: None,
                started,
            }
            .finish(&out, result.evaluations_used)
        }
        Command::Estimate { game, est } => {
            let (spec, g) = load_game(&game)?;
            let external = matches!(spec, GameSpec::External { .. });
            run_estimate("estimate", serde_json::to_value(&spec)?, &g, &est, external)
        }
        Command::RunExternal { cmd, timeout, est } => {
            est.config()?;
            let game = ExternalGame::spawn(&cmd, Duration::from_secs(timeout))?.into_game()?;
            let spec = GameSpec::External {
                cmd,
                timeout_secs: Some(timeout),
            };
            run_estimate("run-external", serde_json::to_value(&spec)?, &game, &est, true)
        }
        Command::Prune {
            estimates,
            game,
            rule,
            out,
        } => {
            let started = now_ms();
            let rule: PruneRule = rule.parse()?;
            let estimates = io::read_estimates_csv(&std::fs::read_to_string(&estimates)?)?;
            let (spec, game) = load_game(&game)?;
            let report = prune_by_rule(&estimates, &game, rule)?;
            io::write_string_atomic(&out, &report.to_json()?)?;
            RunRecord {
                command: "prune",
                game_spec: Some(serde_json::to_value(&spec)?),
                config: None,
                started,
            }
            .finish(&out, game.raw_evaluations())
        }
        Command::Curve {
            game,
            ranking,
            seeds,
            seed,
            epsilon,
            out,
        } => {
            let started = now_ms();
            let (spec, game) = load_game(&game)?;
            let mut curves = Vec::new();
            for r in &ranking {
                curves.push(match parse_ranking(r, &game, epsilon)? {
                    Some(source) => iterative_curve(&game, &source)?,
                    None => random_curve(&game, seeds, seed)?,
                });
            }
            io::write_string_atomic(&out, &io::curves_csv(&curves)?)?;
            RunRecord {
                command: "curve",
                game_spec: Some(serde_json::to_value(&spec)?),
                config: None,
                started,
            }
            .finish(&out, game.raw_evaluations())
        }
        Command::Correlate { estimates, labels, out } => {
            let started = now_ms();
            if estimates.len() != labels.len() {
                return Err(Error::arg(format!(
                    "{} estimate files but {} labels",
                    estimates.len(),
                    labels.len()
                )));
            }
            let profiles = estimates
                .iter()
                .zip(&labels)
                .map(|(path, label)| {
                    let est = io::read_estimates_csv(&std::fs::read_to_string(path)?)?;
                    Ok((label.clone(), est.iter().map(|e| e.mean).collect()))
                })
                .collect::<Result<Vec<(String, Vec<f64>)>>>()?;
            let matrix = correlation_matrix(&profiles)?;
            io::write_string_atomic(&out, &io::correlation_csv(&matrix)?)?;
            RunRecord {
                command: "correlate",
                game_spec: None,
                config: None,
                started,
            }
            .finish(&out, 0)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_evaluator_failure() {
                EXIT_EVALUATOR
            } else {
                EXIT_USAGE
            }
        }
    }
}
