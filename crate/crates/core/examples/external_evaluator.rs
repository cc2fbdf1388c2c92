//! Both ends of the external evaluator protocol. With `serve`, this program
//! is an evaluator for an additive game on stdin/stdout; without arguments
//! it launches itself in that mode and estimates Shapley values through the
//! process boundary.
//!
//! $ cargo run --example external_evaluator
//! $ coalition-prune run-external --cmd "target/debug/examples/external_evaluator serve" --out est.csv

use std::time::Duration;

use coalition_prune::estimator::{estimate, EstimatorConfig};
use coalition_prune::games::ExternalGame;
use coalition_prune::protocol::serve;
use coalition_prune::MetricRange;

const WEIGHTS: [f64; 6] = [0.08, -0.03, 0.05, 0.02, -0.06, 0.04];

fn main() -> coalition_prune::Result<()> {
    if std::env::args().nth(1).as_deref() == Some("serve") {
        let stdin = std::io::stdin();
        return serve(stdin.lock(), std::io::stdout().lock(), WEIGHTS.len(), MetricRange::UNIT, |mask| {
            0.5 + mask.iter().zip(WEIGHTS).filter(|(on, _)| **on).map(|(_, w)| w).sum::<f64>()
        });
    }

    let me = std::env::current_exe()?;
    let command = format!("'{}' serve", me.display());
    let game = ExternalGame::spawn(&command, Duration::from_secs(10))?.into_game()?;
    let out = estimate(&game, &EstimatorConfig::default(), None)?;
    for e in &out.estimates {
        println!("player {}: {:+.4} (true {:+.4}) after {} samples", e.player.0, e.mean, WEIGHTS[e.player.0], e.t);
    }
    println!("{} distinct coalitions sent to the evaluator", game.raw_evaluations());
    Ok(())
}
