//! Attention heads of the toy transformer as players: the gate invariant,
//! exact head attributions, and the gate-gradient baseline.
//!
//! $ cargo run --release --example transformer_heads [dataset_size]

use coalition_prune::exact::exact_shapley;
use coalition_prune::games::{generate_synthetic_dataset, ToyTransformer, ToyTransformerSpec, TransformerGame};
use coalition_prune::pruning::gradient_importance_for;
use coalition_prune::Game;

fn main() -> coalition_prune::Result<()> {
    let size: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(128);
    let spec = ToyTransformerSpec::default();
    let model = ToyTransformer::new(spec.clone())?;
    let dataset = generate_synthetic_dataset(&spec, "en", size, 0)?;

    // closing a gate is the same as deleting the head's output
    let tokens = &dataset.sequences[0];
    let mut gates = vec![1.0; spec.n_heads()];
    gates[3] = 0.0;
    let mut zeroed = vec![false; spec.n_heads()];
    zeroed[3] = true;
    let a = model.forward(&gates, tokens)?;
    let b = model.forward_with_zeroed_heads(&vec![1.0; spec.n_heads()], tokens, &zeroed)?;
    println!("gate 3 closed == head 3 zeroed: {}", a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));

    let gradient = gradient_importance_for(&model, &dataset, 1e-3)?;
    let game = Game::new(TransformerGame::new(model, dataset)?)?;
    println!(
        "accuracy: all heads {:.3}, no heads {:.3} ({} examples)",
        game.raw_metric(&game.grand_coalition())?,
        game.baseline(),
        size
    );
    let phi = exact_shapley(&game)?.values;
    println!("\nhead  layer.head  shapley   |dL/dG|");
    for (i, v) in phi.iter().enumerate() {
        let c = game.head_layout().coordinate(coalition_prune::PlayerId(i));
        println!("{i:>4}  {:>5}.{:<4}  {v:>+7.4}   {:.4}", c.layer, c.head, gradient.values[i]);
    }
    // gate 3 closed == head 3 zeroed: true
    // accuracy: all heads ..., no heads ...
    Ok(())
}
