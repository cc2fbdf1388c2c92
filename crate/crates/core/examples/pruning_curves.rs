//! Iterative pruning curves: remove heads in ascending Shapley order and
//! compare with random removal, as CSV on stdout.
//!
//! $ cargo run --example pruning_curves > curves.csv

use coalition_prune::estimator::{estimate, EstimatorConfig};
use coalition_prune::games::{make_planted_game, PlantedMultilingualSpec};
use coalition_prune::io::curves_csv;
use coalition_prune::pruning::{iterative_curve, random_curve, RankingSource};

fn main() -> coalition_prune::Result<()> {
    let game = make_planted_game(&PlantedMultilingualSpec::interference_demo(0.01, 0), "en")?;
    let out = estimate(&game, &EstimatorConfig::default(), None)?;
    let shapley = iterative_curve(&game, &RankingSource::shapley(&out.estimates))?;
    let random = random_curve(&game, 10, 0)?;
    eprintln!(
        "mean metric over sparsity levels: shapley {:.4}, random {:.4}",
        shapley.mean_metric(),
        random.mean_metric()
    );
    print!("{}", curves_csv(&[shapley, random])?);
    // heads_removed,metric,ranking_kind
    // 0,0.18...,shapley
    // 1,0.23...,shapley
    Ok(())
}
