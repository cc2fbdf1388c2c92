//! Independent oracles for the exact solvers and the Monte Carlo estimator.

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use coalition_prune::estimator::{estimate, EstimatorConfig, Mode};
use coalition_prune::exact::exact_shapley;
use coalition_prune::games::{
    make_additive_game, make_glove_game, make_planted_game, make_unanimity_game, AdditiveGameSpec, PairwiseTerm,
    PlantedMultilingualSpec,
};
use coalition_prune::{Coalition, Game};

/// Visits every permutation of `items` (plain recursive generation).
fn for_each_permutation(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        for_each_permutation(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Shapley values as the average marginal contribution over all n!
/// insertion orders, with `v` given as a plain function of a bitmask.
fn brute_force(n: usize, v: &dyn Fn(u64) -> f64) -> Vec<f64> {
    let mut phi = vec![0.0; n];
    let mut count = 0.0;
    let mut items: Vec<usize> = (0..n).collect();
    for_each_permutation(&mut items, 0, &mut |order| {
        let mut mask = 0u64;
        for &p in order {
            let before = v(mask);
            mask |= 1 << p;
            phi[p] += v(mask) - before;
        }
        count += 1.0;
    });
    phi.iter().map(|x| x / count).collect()
}

fn game_fn(game: &Game) -> impl Fn(u64) -> f64 + '_ {
    move |mask| {
        game.evaluate_adjusted(&Coalition::from_mask(game.n_players(), mask).unwrap())
            .unwrap()
    }
}

#[test]
fn glove_matches_hand_written_brute_force() {
    // left glove held by 0, right gloves by 1 and 2; a pair is worth 1
    let v = |mask: u64| f64::from(mask & 1 == 1 && mask & 0b110 != 0);
    let oracle = brute_force(3, &v);
    let exact = exact_shapley(&make_glove_game().unwrap()).unwrap();
    for (a, b) in oracle.iter().zip(&exact.values) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
    assert_abs_diff_eq!(oracle[0], 2.0 / 3.0, epsilon = 1e-12);
    assert_eq!(exact.evaluations_used, 8);
}

#[test]
fn unanimity_players_split_the_prize() {
    for n in 1..=7 {
        let exact = exact_shapley(&make_unanimity_game(n).unwrap()).unwrap();
        for v in exact.values {
            assert_abs_diff_eq!(v, 1.0 / n as f64, epsilon = 1e-12);
        }
    }
}

/// `n >= 3` players with two pairwise interactions.
fn interacting_game(n: usize, seed: u64, noise: f64) -> Game {
    let coeff = (0..n).map(|i| vec![0.08 * ((i as f64 * 1.7).sin())]).collect();
    let pairwise = vec![
        PairwiseTerm { i: 0, j: 1, value: 0.05 },
        PairwiseTerm { i: 1, j: n - 1, value: -0.04 },
    ];
    let spec = PlantedMultilingualSpec {
        n_players: n,
        languages: vec!["xx".into()],
        base: vec![0.3],
        coeff,
        pairwise,
        noise_scale: noise,
        seed,
        metric_min: 0.0,
        metric_max: 1.0,
        heads_per_layer: None,
    };
    make_planted_game(&spec, "xx").unwrap()
}

#[test]
fn subset_solver_matches_permutation_brute_force_with_interactions_and_noise() {
    for n in 3..=7 {
        let game = interacting_game(n, n as u64, 0.02);
        let oracle = brute_force(n, &game_fn(&game));
        let exact = exact_shapley(&game).unwrap().values;
        for (a, b) in oracle.iter().zip(&exact) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }
}

#[test]
fn plain_monte_carlo_is_unbiased() {
    let game = interacting_game(5, 3, 0.02);
    let exact = exact_shapley(&game).unwrap().values;
    let config = EstimatorConfig {
        mode: Mode::PlainMc,
        max_permutations: 20_000,
        seed: 17,
        ..EstimatorConfig::default()
    };
    let out = estimate(&game, &config, None).unwrap();
    for e in &out.estimates {
        assert_eq!(e.t, 20_000);
        let se = (e.variance / e.t as f64).sqrt();
        let err = (e.mean - exact[e.player.0]).abs();
        assert!(err <= 3.0 * se + 1e-12, "player {}: error {err} vs 3 SE {}", e.player, 3.0 * se);
    }
}

#[test]
fn truncated_scans_recover_additive_weights() {
    let weights = vec![0.07, -0.03, 0.02, 0.05, -0.06, 0.01, 0.04, -0.02];
    let game = make_additive_game(AdditiveGameSpec::new(0.5, weights.clone())).unwrap();
    let config = EstimatorConfig {
        mode: Mode::TruncatedMc,
        max_permutations: 2000,
        seed: 5,
        ..EstimatorConfig::default()
    };
    let out = estimate(&game, &config, None).unwrap();
    for e in &out.estimates {
        assert!((e.mean - weights[e.player.0]).abs() < 1e-2);
        assert!(e.t > 0);
    }
    // 4 removals + the full coalition per permutation, plus the baseline
    assert_eq!(out.evaluations_used, 1 + 2000 * 5);
}

#[test]
fn larger_budgets_never_use_fewer_evaluations() {
    let game = interacting_game(8, 1, 0.01);
    for mode in [Mode::PlainMc, Mode::TruncatedMc, Mode::Tmab] {
        let mut previous = (0, 0);
        for budget in [10, 20, 50, 100, 400, 1000] {
            let config = EstimatorConfig {
                mode,
                max_permutations: budget,
                seed: 2,
                ..EstimatorConfig::default()
            };
            let out = estimate(&game, &config, None).unwrap();
            let now = (out.evaluations_used, out.permutations_completed);
            assert!(now.0 >= previous.0 && now.1 >= previous.1, "{mode:?} at {budget}: {now:?} < {previous:?}");
            if mode != Mode::Tmab {
                assert!(now.0 > previous.0);
            }
            previous = now;
        }
    }
}

#[test]
fn bandit_intervals_stop_only_when_excluding_zero() {
    let game = interacting_game(8, 9, 0.01);
    let out = estimate(&game, &EstimatorConfig::default(), None).unwrap();
    for e in &out.estimates {
        if e.converged {
            assert!(e.lower > 0.0 || e.upper < 0.0, "{e:?}");
            assert!(e.t >= 5);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_values_satisfy_efficiency_and_match_brute_force(
        coeff in prop::collection::vec(-0.2f64..0.2, 2..=6),
        base in 0.1f64..0.9,
        seed in any::<u64>(),
    ) {
        let n = coeff.len();
        let spec = PlantedMultilingualSpec {
            n_players: n,
            languages: vec!["xx".into()],
            base: vec![base],
            coeff: coeff.iter().map(|c| vec![*c]).collect(),
            pairwise: vec![],
            noise_scale: 0.05,
            seed,
            metric_min: 0.0,
            metric_max: 1.0,
            heads_per_layer: None,
        };
        let game = make_planted_game(&spec, "xx").unwrap();
        let exact = exact_shapley(&game).unwrap().values;
        let total: f64 = exact.iter().sum();
        prop_assert!((total - game.grand_value().unwrap()).abs() < 1e-12);
        let oracle = brute_force(n, &game_fn(&game));
        for (a, b) in oracle.iter().zip(&exact) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn estimator_output_is_a_function_of_the_seed(seed in any::<u64>(), workers in 1usize..4) {
        let game = interacting_game(6, 4, 0.01);
        let base = EstimatorConfig { seed, max_permutations: 60, ..EstimatorConfig::default() };
        let a = estimate(&game, &base, None).unwrap();
        let b = estimate(&game, &EstimatorConfig { workers, ..base }, None).unwrap();
        prop_assert_eq!(a.estimates, b.estimates);
        prop_assert_eq!(a.evaluations_used, b.evaluations_used);
    }
}
