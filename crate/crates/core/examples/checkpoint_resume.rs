//! Interrupt an estimation, persist the checkpoint, and resume it; the
//! result equals an uninterrupted run.
//!
//! $ cargo run --example checkpoint_resume

use coalition_prune::estimator::{estimate, estimate_with_sink, Checkpoint, CheckpointSink, EstimatorConfig, Mode};
use coalition_prune::games::{make_planted_game, PlantedMultilingualSpec};

fn main() -> coalition_prune::Result<()> {
    let game = make_planted_game(&PlantedMultilingualSpec::interference_demo(0.01, 0), "sw")?;
    let config = |max_permutations| EstimatorConfig {
        mode: Mode::PlainMc,
        max_permutations,
        seed: 99,
        ..EstimatorConfig::default()
    };

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("run.ckpt");
    let mut write = |c: &Checkpoint| {
        println!("checkpoint at {} permutations", c.permutations_completed);
        c.save(&path)
    };
    let sink = CheckpointSink {
        every: 50,
        write: &mut write,
    };
    // stop early, as if the process had been killed after 150 permutations
    estimate_with_sink(&game, &config(150), None, Some(sink))?;

    let restored = Checkpoint::load(&path)?;
    let resumed = estimate(&game, &config(400), Some(restored))?;
    let fresh = estimate(&game, &config(400), None)?;
    println!("resumed == uninterrupted: {}", resumed.estimates == fresh.estimates);
    println!(
        "evaluations: resumed run {} + first run, uninterrupted {}",
        resumed.evaluations_used, fresh.evaluations_used
    );
    // checkpoint at 50 permutations
    // checkpoint at 100 permutations
    // checkpoint at 150 permutations
    // resumed == uninterrupted: true
    Ok(())
}
