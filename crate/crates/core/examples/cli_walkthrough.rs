//! Every `coalition-prune` subcommand on a small planted game, run
//! in-process against a scratch directory.
//!
//! $ cargo run --example cli_walkthrough

use coalition_prune::cli;

fn main() -> std::io::Result<()> {
    let dir = tempfile::tempdir()?;
    let p = |name: &str| dir.path().join(name).display().to_string();
    std::fs::write(
        p("en.json"),
        r#"{"family": "planted", "n_players": 6, "languages": ["en", "sw"], "base": [0.5, 0.4],
            "coeff": [[0.05, 0.03], [-0.03, 0.04], [0.04, -0.02], [-0.02, 0.05], [0.06, 0.01], [-0.01, 0.02]],
            "noise_scale": 0.005, "language": "en"}"#,
    )?;
    let sw = std::fs::read_to_string(p("en.json"))?.replace(r#""language": "en""#, r#""language": "sw""#);
    std::fs::write(p("sw.json"), sw)?;

    let shapley = format!("shapley:{}", p("en.csv"));
    let steps: Vec<Vec<String>> = vec![
        vec!["exact", "--game", &p("en.json"), "--out", &p("exact.csv")],
        vec!["estimate", "--game", &p("en.json"), "--seed", "1", "--checkpoint", &p("en.ckpt"), "--out", &p("en.csv")],
        vec!["estimate", "--game", &p("sw.json"), "--seed", "1", "--out", &p("sw.csv")],
        vec!["prune", "--estimates", &p("en.csv"), "--game", &p("en.json"), "--out", &p("prune.json")],
        vec!["curve", "--game", &p("en.json"), "--ranking", &shapley, "--ranking", "random", "--out", &p("curve.csv")],
        vec!["correlate", "--estimates", &p("en.csv"), &p("sw.csv"), "--labels", "en", "sw", "--out", &p("corr.csv")],
    ]
    .into_iter()
    .map(|s| s.into_iter().map(String::from).collect())
    .collect();

    for args in steps {
        let code = cli::run(std::iter::once("coalition-prune".to_string()).chain(args.iter().cloned()));
        println!("$ coalition-prune {} -> exit {code}", args[0]);
    }
    for file in ["exact.csv", "prune.json", "corr.csv", "en.csv.manifest.json"] {
        println!("\n== {file}\n{}", std::fs::read_to_string(p(file))?);
    }
    Ok(())
}
