//! Exact Shapley values for the small reference games.
//!
//! $ cargo run --example exact_oracle_games

use coalition_prune::exact::{exact_shapley, exact_shapley_permutation_form};
use coalition_prune::games::{make_additive_game, make_glove_game, make_unanimity_game, AdditiveGameSpec};
use coalition_prune::Game;

fn show(name: &str, game: &Game) -> coalition_prune::Result<()> {
    let subset = exact_shapley(game)?;
    let perms = exact_shapley_permutation_form(game)?;
    let gap = subset.values.iter().zip(&perms.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let total: f64 = subset.values.iter().sum();
    println!(
        "{name:<10} phi = {:?}\n{:<10} sum = {total:.6}, V(grand) = {:.6}, subset/permutation gap = {gap:.1e}, {} evaluations",
        subset.values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
        "",
        game.grand_value()?,
        subset.evaluations_used,
    );
    Ok(())
}

fn main() -> coalition_prune::Result<()> {
    show("glove", &make_glove_game()?)?;
    show("unanimity", &make_unanimity_game(4)?)?;
    show("additive", &make_additive_game(AdditiveGameSpec::new(0.5, vec![0.2, -0.1, 0.3]))?)?;
    // glove      phi = ["0.6667", "0.1667", "0.1667"]
    //            sum = 1.000000, V(grand) = 1.000000, subset/permutation gap = 0.0e0, 8 evaluations
    // ...
    Ok(())
}
