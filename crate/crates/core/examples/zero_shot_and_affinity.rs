//! Transfer an English pruning mask to other languages and compare
//! languages by the rank correlation of their head values.
//!
//! $ cargo run --example zero_shot_and_affinity

use coalition_prune::estimator::{estimate, EstimatorConfig};
use coalition_prune::games::{make_planted_game, PlantedMultilingualSpec};
use coalition_prune::io::correlation_csv;
use coalition_prune::pruning::{correlation_matrix, prune_negative_upper, zero_shot_transfer};

fn main() -> coalition_prune::Result<()> {
    let spec = PlantedMultilingualSpec::interference_demo(0.01, 3);
    let mut profiles = Vec::new();
    let mut targeted = Vec::new();
    let mut games = Vec::new();
    for language in &spec.languages {
        let game = make_planted_game(&spec, language)?;
        let out = estimate(&game, &EstimatorConfig::default(), None)?;
        targeted.push(prune_negative_upper(&out.estimates, &game)?);
        profiles.push((language.clone(), out.estimates.iter().map(|e| e.mean).collect()));
        games.push(game);
    }

    let source = &targeted[spec.language_index("en")?];
    println!("en mask prunes {:?}", source.pruned().iter().map(|p| p.0).collect::<Vec<_>>());
    println!("target  zero-shot delta  targeted delta");
    for (l, language) in spec.languages.iter().enumerate() {
        let zs = zero_shot_transfer(source, &games[l])?;
        println!("{language:<7} {:>+15.4}  {:>+14.4}", zs.delta, targeted[l].delta);
    }

    let matrix = correlation_matrix(&profiles)?;
    println!("\n{}", correlation_csv(&matrix)?);
    println!("least correlated language: {}", matrix.least_correlated());
    // the sw row has the lowest mean correlation, and the en mask hurts sw
    Ok(())
}
