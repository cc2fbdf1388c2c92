//! Brute-force exact Shapley values.
//!
//! Both solvers first tabulate `V` over all `2^N` coalitions (filled
//! concurrently, reduced sequentially in mask order so results are
//! bit-reproducible). The subset form weights each marginal by
//! `|S|!(N-|S|-1)!/N!`; the permutation form walks all `N!` orders.

use rayon::prelude::*;

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::Game;

pub const DEFAULT_EXACT_CAP: usize = 20;
pub const PERMUTATION_FORM_CAP: usize = 8;
/// Above this size the subset weights are computed in log space.
const DIRECT_FACTORIAL_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactShapleyResult {
    pub values: Vec<f64>,
    pub evaluations_used: u64,
}

fn check_cap(game: &Game, cap: usize) -> Result<usize> {
    let n = game.n_players();
    if n > cap || n >= 64 {
        return Err(Error::Capacity { players: n, cap });
    }
    Ok(n)
}

/// `V(S)` for every mask `S` in `0..2^n`.
fn value_table(game: &Game, n: usize) -> Result<Vec<f64>> {
    (0..1u64 << n)
        .into_par_iter()
        .map(|mask| game.evaluate_adjusted(&Coalition::from_mask(n, mask)?))
        .collect()
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// `w[s] = s!(n-s-1)!/n!` for `s` in `0..n`.
pub(crate) fn subset_weights(n: usize) -> Vec<f64> {
    if n <= DIRECT_FACTORIAL_LIMIT {
        let fact: Vec<f64> = (0..=n)
            .scan(1.0f64, |acc, k| {
                if k > 0 {
                    *acc *= k as f64;
                }
                Some(*acc)
            })
            .collect();
        (0..n).map(|s| fact[s] * fact[n - s - 1] / fact[n]).collect()
    } else {
        let ln_n = ln_factorial(n);
        (0..n)
            .map(|s| (ln_factorial(s) + ln_factorial(n - s - 1) - ln_n).exp())
            .collect()
    }
}

/// Exact Shapley values with the default player cap.
pub fn exact_shapley(game: &Game) -> Result<ExactShapleyResult> {
    exact_shapley_with_cap(game, DEFAULT_EXACT_CAP)
}

pub fn exact_shapley_with_cap(game: &Game, cap: usize) -> Result<ExactShapleyResult> {
    let n = check_cap(game, cap)?;
    let table = value_table(game, n)?;
    let weights = subset_weights(n);
    let mut values = vec![0.0; n];
    for (mask, &v) in table.iter().enumerate() {
        let size = (mask as u64).count_ones() as usize;
        if size == n {
            continue;
        }
        let w = weights[size];
        for (h, phi) in values.iter_mut().enumerate() {
            let bit = 1usize << h;
            if mask & bit == 0 {
                *phi += w * (table[mask | bit] - v);
            }
        }
    }
    Ok(ExactShapleyResult {
        values,
        evaluations_used: table.len() as u64,
    })
}

/// Average of marginal contributions over all `N!` orders (N ≤ 8).
pub fn exact_shapley_permutation_form(game: &Game) -> Result<ExactShapleyResult> {
    let n = check_cap(game, PERMUTATION_FORM_CAP)?;
    let table = value_table(game, n)?;
    let mut values = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut count = 0u64;
    let mut accumulate = |order: &[usize]| {
        let mut mask = 0usize;
        for &p in order {
            let next = mask | 1 << p;
            values[p] += table[next] - table[mask];
            mask = next;
        }
        count += 1;
    };
    // Heap's algorithm, iterative.
    let mut c = vec![0usize; n];
    accumulate(&order);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(c[i], i);
            }
            accumulate(&order);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    for v in values.iter_mut() {
        *v /= count as f64;
    }
    Ok(ExactShapleyResult {
        values,
        evaluations_used: table.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{FnMetric, MetricRange};
    use crate::games::{make_additive_game, make_glove_game, make_unanimity_game, AdditiveGameSpec};

    #[test]
    fn weights_sum_to_one_per_player() {
        // Σ_s C(n-1, s) w[s] = 1
        for n in [1usize, 2, 5, 12, 13, 20] {
            let w = subset_weights(n);
            let mut binom = 1.0f64;
            let mut total = 0.0;
            for (s, ws) in w.iter().enumerate() {
                total += binom * ws;
                binom = binom * (n - 1 - s) as f64 / (s + 1) as f64;
            }
            assert!((total - 1.0).abs() < 1e-12, "n={n}: {total}");
        }
    }

    #[test]
    fn additive_glove_unanimity() {
        let g = make_additive_game(AdditiveGameSpec::new(0.5, vec![0.2, -0.1, 0.3])).unwrap();
        let r = exact_shapley(&g).unwrap();
        for (v, w) in r.values.iter().zip([0.2, -0.1, 0.3]) {
            assert!((v - w).abs() < 1e-12);
        }
        assert_eq!(r.evaluations_used, 8);

        let r = exact_shapley(&make_glove_game().unwrap()).unwrap();
        for (v, e) in r.values.iter().zip([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]) {
            assert!((v - e).abs() < 1e-12);
        }

        let r = exact_shapley(&make_unanimity_game(5).unwrap()).unwrap();
        assert!(r.values.iter().all(|v| (v - 0.2).abs() < 1e-12));
    }

    #[test]
    fn single_player() {
        let g = Game::new(FnMetric::new("one", 1, MetricRange::UNIT, |c| if c.is_empty() { 0.0 } else { 0.7 })).unwrap();
        assert!((exact_shapley(&g).unwrap().values[0] - 0.7).abs() < 1e-15);
        assert!((exact_shapley_permutation_form(&g).unwrap().values[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn capacity_refusal() {
        let g = make_unanimity_game(9).unwrap();
        assert!(matches!(exact_shapley_permutation_form(&g), Err(Error::Capacity { players: 9, cap: 8 })));
        assert!(matches!(exact_shapley_with_cap(&g, 8), Err(Error::Capacity { .. })));
        let big = make_unanimity_game(30).unwrap();
        assert!(matches!(exact_shapley(&big), Err(Error::Capacity { players: 30, cap: 20 })));
    }
}
