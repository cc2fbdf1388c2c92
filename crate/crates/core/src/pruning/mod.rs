//! Pruning decisions and the analyses built on them.

pub mod correlation;

use serde::{Deserialize, Serialize};

pub use correlation::{correlation_matrix, spearman_rho, CorrelationMatrix};

use crate::coalition::{Coalition, PlayerId};
use crate::error::{Error, Result};
use crate::estimator::{update_stats, PlayerStats, ShapleyEstimate};
use crate::game::Game;
use crate::games::transformer::{ToyTransformer, TransformerGame};
use crate::games::SyntheticDataset;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Keep,
    Prune,
}

/// Which side of the estimate decides pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneRule {
    /// Prune when the Bernstein upper bound is negative.
    Upper,
    /// Prune when the point estimate is negative.
    Point,
}

impl std::str::FromStr for PruneRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(PruneRule::Upper),
            "point" => Ok(PruneRule::Point),
            other => Err(Error::arg(format!("unknown prune rule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneReport {
    pub decisions: Vec<Decision>,
    pub k: usize,
    pub mask: Coalition,
    /// Raw metric of the unpruned (grand) coalition.
    pub metric_before: f64,
    /// Raw metric at `mask`.
    pub metric_after: f64,
    pub delta: f64,
}

#[derive(Serialize, Deserialize)]
struct PruneReportJson {
    decisions: Vec<Decision>,
    k: usize,
    mask_bits: String,
    metric_before: f64,
    metric_after: f64,
    delta: f64,
}

impl PruneReport {
    /// Evaluates `game` with the players outside `mask` removed.
    pub fn for_mask(game: &Game, mask: Coalition) -> Result<Self> {
        if mask.width() != game.n_players() {
            return Err(Error::arg(format!(
                "mask covers {} players, game has {}",
                mask.width(),
                game.n_players()
            )));
        }
        let decisions: Vec<Decision> = mask
            .to_bools()
            .into_iter()
            .map(|keep| if keep { Decision::Keep } else { Decision::Prune })
            .collect();
        let metric_before = game.raw_metric(&game.grand_coalition())?;
        let metric_after = game.raw_metric(&mask)?;
        Ok(Self {
            k: decisions.iter().filter(|d| **d == Decision::Prune).count(),
            decisions,
            mask,
            metric_before,
            metric_after,
            delta: metric_after - metric_before,
        })
    }

    pub fn pruned(&self) -> Vec<PlayerId> {
        self.decisions
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == Decision::Prune)
            .map(|(i, _)| PlayerId(i))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PruneReportJson {
            decisions: self.decisions.clone(),
            k: self.k,
            mask_bits: self.mask.to_bit_string(),
            metric_before: self.metric_before,
            metric_after: self.metric_after,
            delta: self.delta,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: PruneReportJson = serde_json::from_str(text)?;
        let mask = Coalition::from_bit_string(&r.mask_bits)?;
        if mask.width() != r.decisions.len() {
            return Err(Error::Format("mask_bits and decisions disagree in length".into()));
        }
        Ok(Self {
            decisions: r.decisions,
            k: r.k,
            mask,
            metric_before: r.metric_before,
            metric_after: r.metric_after,
            delta: r.delta,
        })
    }
}

/// Prunes every player whose estimate satisfies `rule` and evaluates the
/// resulting mask. The number pruned falls out of the rule; there is no
/// target K.
pub fn prune_by_rule(estimates: &[ShapleyEstimate], game: &Game, rule: PruneRule) -> Result<PruneReport> {
    if estimates.len() != game.n_players() {
        return Err(Error::arg(format!(
            "{} estimates for a game with {} players",
            estimates.len(),
            game.n_players()
        )));
    }
    let keep: Vec<bool> = estimates
        .iter()
        .map(|e| match rule {
            PruneRule::Upper => e.upper >= 0.0,
            PruneRule::Point => e.mean >= 0.0,
        })
        .collect();
    PruneReport::for_mask(game, Coalition::from_bools(&keep))
}

/// Removes every player whose Bernstein upper bound is negative.
pub fn prune_negative_upper(estimates: &[ShapleyEstimate], game: &Game) -> Result<PruneReport> {
    prune_by_rule(estimates, game, PruneRule::Upper)
}

/// Applies the source mask to `target` (mask transfer, not value transfer).
pub fn zero_shot_transfer(source: &PruneReport, target: &Game) -> Result<PruneReport> {
    if source.mask.width() != target.n_players() {
        return Err(Error::arg(format!(
            "source mask covers {} players, target game has {}",
            source.mask.width(),
            target.n_players()
        )));
    }
    PruneReport::for_mask(target, source.mask.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankingKind {
    Shapley,
    Gradient,
    Random,
}

impl RankingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RankingKind::Shapley => "shapley",
            RankingKind::Gradient => "gradient",
            RankingKind::Random => "random",
        }
    }
}

/// Importance values used to order players for Bottom-K pruning.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingSource {
    pub kind: RankingKind,
    pub values: Vec<f64>,
    pub seed: Option<u64>,
}

impl RankingSource {
    pub fn shapley(estimates: &[ShapleyEstimate]) -> Self {
        Self {
            kind: RankingKind::Shapley,
            values: estimates.iter().map(|e| e.mean).collect(),
            seed: None,
        }
    }

    pub fn from_values(kind: RankingKind, values: Vec<f64>) -> Self {
        Self { kind, values, seed: None }
    }

    /// A uniformly random static ranking.
    pub fn random(n_players: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::tagged(seed, "random-ranking");
        Self {
            kind: RankingKind::Random,
            values: (0..n_players).map(|_| rng.next_f64()).collect(),
            seed: Some(seed),
        }
    }

    pub fn n_players(&self) -> usize {
        self.values.len()
    }

    /// Players from least to most important; ties go to the lower index.
    pub fn ascending(&self) -> Vec<PlayerId> {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]).then(a.cmp(&b)));
        order.into_iter().map(PlayerId).collect()
    }
}

/// Mask with the `k` lowest-ranked players removed.
pub fn bottom_k_mask(ranking: &RankingSource, k: usize) -> Result<Coalition> {
    let n = ranking.n_players();
    if k > n {
        return Err(Error::arg(format!("k = {k} exceeds {n} players")));
    }
    let mut mask = Coalition::grand(n);
    for p in ranking.ascending().into_iter().take(k) {
        mask.remove(p)?;
    }
    Ok(mask)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruningCurve {
    pub kind: RankingKind,
    /// `(heads_removed, adjusted metric)` for heads_removed = 0..=N.
    pub points: Vec<(usize, f64)>,
}

impl PruningCurve {
    /// Mean metric over all sparsity levels.
    pub fn mean_metric(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum::<f64>() / self.points.len() as f64
    }
}

/// Adjusted metric after removing the bottom k players, for every k, with a
/// static ranking.
pub fn iterative_curve(game: &Game, ranking: &RankingSource) -> Result<PruningCurve> {
    let n = game.n_players();
    if ranking.n_players() != n {
        return Err(Error::arg(format!("ranking covers {} players, game has {n}", ranking.n_players())));
    }
    let order = ranking.ascending();
    let mut mask = Coalition::grand(n);
    let mut points = Vec::with_capacity(n + 1);
    points.push((0, game.evaluate_adjusted(&mask)?));
    for (k, p) in order.into_iter().enumerate() {
        mask.remove(p)?;
        points.push((k + 1, game.evaluate_adjusted(&mask)?));
    }
    Ok(PruningCurve {
        kind: ranking.kind,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomBaseline {
    /// Mean raw metric over the draws.
    pub mean: f64,
    pub standard_error: f64,
    pub draws: usize,
}

/// Average raw metric over `n_draws` networks with `k` uniformly random
/// players removed.
pub fn random_prune_baseline(game: &Game, k: usize, n_draws: usize, seed: u64) -> Result<RandomBaseline> {
    let n = game.n_players();
    if k > n {
        return Err(Error::arg(format!("k = {k} exceeds {n} players")));
    }
    if n_draws == 0 {
        return Err(Error::arg("n_draws must be >= 1"));
    }
    let mut stats = PlayerStats::default();
    for d in 0..n_draws {
        let mut players: Vec<PlayerId> = (0..n).map(PlayerId).collect();
        SplitMix64::keyed(seed, ((k as u64) << 32) | d as u64).shuffle(&mut players);
        let mut mask = Coalition::grand(n);
        for &p in &players[..k] {
            mask.remove(p)?;
        }
        stats = update_stats(stats, game.raw_metric(&mask)?);
    }
    let standard_error = if n_draws > 1 {
        (stats.m2 / (n_draws - 1) as f64 / n_draws as f64).sqrt()
    } else {
        0.0
    };
    Ok(RandomBaseline {
        mean: stats.mean,
        standard_error,
        draws: n_draws,
    })
}

/// Random-pruning curve, re-drawing `n_draws` subsets at every k.
pub fn random_curve(game: &Game, n_draws: usize, seed: u64) -> Result<PruningCurve> {
    let points = (0..=game.n_players())
        .map(|k| Ok((k, random_prune_baseline(game, k, n_draws, seed)?.mean - game.baseline())))
        .collect::<Result<Vec<_>>>()?;
    Ok(PruningCurve {
        kind: RankingKind::Random,
        points,
    })
}

fn cross_entropy(scores: &[f64], label: usize) -> f64 {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    lse - scores[label]
}

/// Gate-gradient importance: for each head, the mean over examples of
/// `|∂L/∂G_h|` at all gates = 1, with `L` the cross-entropy of the true
/// class, approximated by central differences of half-width `epsilon`.
pub fn gradient_importance_for(
    model: &ToyTransformer,
    dataset: &SyntheticDataset,
    epsilon: f64,
) -> Result<RankingSource> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::arg("epsilon must be positive"));
    }
    dataset.check_against(model.spec())?;
    let n = model.n_heads();
    let mut values = vec![0.0; n];
    for (h, value) in values.iter_mut().enumerate() {
        let mut plus = vec![1.0; n];
        let mut minus = vec![1.0; n];
        plus[h] = 1.0 + epsilon;
        minus[h] = 1.0 - epsilon;
        let total: f64 = dataset
            .sequences
            .iter()
            .zip(&dataset.labels)
            .map(|(seq, &label)| {
                let lp = cross_entropy(&model.forward_raw(&plus, seq), label);
                let lm = cross_entropy(&model.forward_raw(&minus, seq), label);
                ((lp - lm) / (2.0 * epsilon)).abs()
            })
            .sum();
        *value = total / dataset.len() as f64;
    }
    Ok(RankingSource::from_values(RankingKind::Gradient, values))
}

/// [`gradient_importance_for`] on a transformer game; other games lack
/// fractional gates and are rejected.
pub fn gradient_importance(game: &Game, epsilon: f64) -> Result<RankingSource> {
    let tg = game.metric_as::<TransformerGame>().ok_or_else(|| {
        Error::UnsupportedGame(format!(
            "gradient importance needs fractional gates; {} is binary-only",
            game.descriptor()
        ))
    })?;
    gradient_importance_for(tg.model(), tg.dataset(), epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::ConvergenceReason;
    use crate::games::{generate_synthetic_dataset, make_additive_game, AdditiveGameSpec, ToyTransformerSpec};

    fn est(mean: f64, upper: f64) -> ShapleyEstimate {
        ShapleyEstimate {
            player: PlayerId(0),
            mean,
            variance: 0.0,
            t: 10,
            lower: 2.0 * mean - upper,
            upper,
            converged: false,
            reason: ConvergenceReason::BudgetExhausted,
        }
    }

    fn additive(w: Vec<f64>) -> Game {
        make_additive_game(AdditiveGameSpec::new(0.5, w)).unwrap()
    }

    #[test]
    fn sign_rule() {
        let g = additive(vec![0.1, -0.05, 0.1]);
        let r = prune_negative_upper(&[est(0.1, 0.2), est(-0.05, -0.01), est(0.0, 0.05)], &g).unwrap();
        assert_eq!(r.pruned(), vec![PlayerId(1)]);
        assert_eq!(r.k, 1);
        assert!((r.delta - 0.05).abs() < 1e-12);

        let r = prune_negative_upper(&[est(0.1, 0.2), est(0.1, 0.3), est(0.0, 0.05)], &g).unwrap();
        assert_eq!(r.k, 0);
        assert!(r.mask.is_grand());
        assert_eq!(r.delta, 0.0);
    }

    #[test]
    fn point_rule_prunes_at_least_as_many() {
        let g = additive(vec![0.1, -0.05, 0.1]);
        let wide = [est(-0.01, 0.2), est(-0.05, 0.1), est(0.02, 0.3)];
        let point = prune_by_rule(&wide, &g, PruneRule::Point).unwrap();
        let upper = prune_by_rule(&wide, &g, PruneRule::Upper).unwrap();
        assert_eq!((point.k, upper.k), (2, 0));
    }

    #[test]
    fn report_json_layout() {
        let g = additive(vec![0.1, -0.05, 0.1]);
        let r = PruneReport::for_mask(&g, Coalition::from_bit_string("101").unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["mask_bits"], "101");
        assert_eq!(v["decisions"], serde_json::json!(["keep", "prune", "keep"]));
        assert_eq!(v["k"], 1);
        assert_eq!(PruneReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }

    #[test]
    fn bottom_k() {
        let r = RankingSource::from_values(RankingKind::Shapley, vec![0.3, -0.2, 0.1]);
        assert!(bottom_k_mask(&r, 0).unwrap().is_grand());
        assert_eq!(bottom_k_mask(&r, 1).unwrap().to_bit_string(), "101");
        let tied = RankingSource::from_values(RankingKind::Shapley, vec![0.1, 0.1, 0.5]);
        assert_eq!(bottom_k_mask(&tied, 1).unwrap().to_bit_string(), "011");
        assert!(matches!(bottom_k_mask(&r, 4), Err(Error::Argument(_))));
    }

    #[test]
    fn additive_curve_is_base_plus_kept_weights() {
        let w = vec![0.1, -0.05, 0.2, -0.02, 0.03];
        let g = additive(w.clone());
        let ranking = RankingSource::from_values(RankingKind::Shapley, w.clone());
        let curve = iterative_curve(&g, &ranking).unwrap();
        assert_eq!(curve.points.len(), 6);
        assert_eq!(curve.points[5], (5, 0.0));
        let order = ranking.ascending();
        for (k, v) in &curve.points {
            let kept: f64 = order[*k..].iter().map(|p| w[p.0]).sum();
            assert!((v - kept).abs() < 1e-12);
        }
        let best = curve.points.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        assert!((curve.points[2].1 - best).abs() < 1e-15, "pruning both negatives is optimal");
    }

    #[test]
    fn random_baseline_properties() {
        let w = vec![0.1, -0.05, 0.2, -0.02, 0.03, 0.04];
        let g = additive(w.clone());
        let grand = g.raw_metric(&g.grand_coalition()).unwrap();
        for seed in [0, 1, 99] {
            assert_eq!(random_prune_baseline(&g, 0, 10, seed).unwrap().mean, grand);
        }
        let a = random_prune_baseline(&g, 3, 10, 7).unwrap();
        assert_eq!(a, random_prune_baseline(&g, 3, 10, 7).unwrap());
        let expected = 0.5 + (1.0 - 3.0 / 6.0) * w.iter().sum::<f64>();
        assert!((a.mean - expected).abs() <= 3.0 * a.standard_error + 1e-12, "{a:?} vs {expected}");
        let curve = random_curve(&g, 10, 3).unwrap();
        assert_eq!(curve.points.last().unwrap().1, 0.0);
    }

    #[test]
    fn transfer_requires_matching_player_count() {
        let src = PruneReport::for_mask(&additive(vec![0.1, -0.1]), Coalition::from_bit_string("10").unwrap()).unwrap();
        assert!(matches!(zero_shot_transfer(&src, &additive(vec![0.1, 0.1, 0.1])), Err(Error::Argument(_))));
        let r = zero_shot_transfer(&src, &additive(vec![0.2, 0.1])).unwrap();
        assert!((r.delta + 0.1).abs() < 1e-12);
    }

    #[test]
    fn gradient_importance_properties() {
        let spec = ToyTransformerSpec::default();
        let ds = generate_synthetic_dataset(&spec, "en", 24, 2).unwrap();
        let model = ToyTransformer::new(spec.clone()).unwrap().with_silenced_head(6).unwrap();
        let imp = gradient_importance_for(&model, &ds, 1e-3).unwrap();
        assert_eq!(imp.values[6], 0.0);
        assert!(imp.values.iter().all(|v| *v >= 0.0));
        assert!(imp.values.iter().filter(|v| **v > 0.0).count() == 7);

        let model = ToyTransformer::new(spec).unwrap();
        let a = gradient_importance_for(&model, &ds, 1e-3).unwrap();
        let b = gradient_importance_for(&model, &ds, 5e-4).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() / y.abs() < 0.01, "{x} vs {y}");
        }
    }

    #[test]
    fn gradient_importance_rejects_binary_games() {
        let g = additive(vec![0.1]);
        assert!(matches!(gradient_importance(&g, 1e-3), Err(Error::UnsupportedGame(_))));
    }
}
