//! Tabular outputs and atomic file writes.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! values always render to identical bytes.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::coalition::{HeadLayout, PlayerId};
use crate::error::{Error, Result};
use crate::estimator::{ConvergenceReason, ShapleyEstimate};
use crate::pruning::{CorrelationMatrix, PruningCurve};

/// Writes through a temporary file in the destination directory, then
/// renames it into place.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut File) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write(tmp.as_file_mut())?;
    tmp.as_file_mut().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_string_atomic(path: &Path, contents: &str) -> Result<()> {
    write_atomic(path, |f| f.write_all(contents.as_bytes()))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// `player,layer,head,shapley`
pub fn exact_csv(values: &[f64], layout: HeadLayout) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["player", "layer", "head", "shapley"])?;
    for (i, v) in values.iter().enumerate() {
        let c = layout.coordinate(PlayerId(i));
        w.write_record([i.to_string(), c.layer.to_string(), c.head.to_string(), v.to_string()])?;
    }
    finish(w)
}

pub fn read_exact_csv(text: &str) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut values = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let player: usize = parse(rec.get(0), "player", row)?;
        if player != row {
            return Err(Error::Format(format!("row {row}: players must be listed in order")));
        }
        values.push(parse(rec.get(3), "shapley", row)?);
    }
    Ok(values)
}

pub const ESTIMATE_COLUMNS: [&str; 10] =
    ["player", "layer", "head", "mean", "variance", "t", "lower", "upper", "converged", "reason"];

/// `player,layer,head,mean,variance,t,lower,upper,converged,reason`
pub fn estimates_csv(estimates: &[ShapleyEstimate], layout: HeadLayout) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ESTIMATE_COLUMNS)?;
    for e in estimates {
        let c = layout.coordinate(e.player);
        w.write_record([
            e.player.0.to_string(),
            c.layer.to_string(),
            c.head.to_string(),
            e.mean.to_string(),
            e.variance.to_string(),
            e.t.to_string(),
            e.lower.to_string(),
            e.upper.to_string(),
            e.converged.to_string(),
            e.reason.as_str().to_string(),
        ])?;
    }
    finish(w)
}

fn parse<T: std::str::FromStr>(field: Option<&str>, name: &str, row: usize) -> Result<T> {
    let raw = field.ok_or_else(|| Error::Format(format!("row {row}: missing column {name}")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Format(format!("row {row}: cannot parse {name} from {raw:?}")))
}

pub fn read_estimates_csv(text: &str) -> Result<Vec<ShapleyEstimate>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ESTIMATE_COLUMNS {
        return Err(Error::Format(format!(
            "estimates header must be {}, got {}",
            ESTIMATE_COLUMNS.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let player: usize = parse(rec.get(0), "player", row)?;
        if player != row {
            return Err(Error::Format(format!("row {row}: players must be listed in order")));
        }
        out.push(ShapleyEstimate {
            player: PlayerId(player),
            mean: parse(rec.get(3), "mean", row)?,
            variance: parse(rec.get(4), "variance", row)?,
            t: parse(rec.get(5), "t", row)?,
            lower: parse(rec.get(6), "lower", row)?,
            upper: parse(rec.get(7), "upper", row)?,
            converged: parse(rec.get(8), "converged", row)?,
            reason: ConvergenceReason::parse(rec.get(9).unwrap_or_default())?,
        });
    }
    Ok(out)
}

/// `heads_removed,metric,ranking_kind`, one block per curve.
pub fn curves_csv(curves: &[PruningCurve]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["heads_removed", "metric", "ranking_kind"])?;
    for curve in curves {
        for (k, v) in &curve.points {
            w.write_record([k.to_string(), v.to_string(), curve.kind.as_str().to_string()])?;
        }
    }
    finish(w)
}

/// Square matrix with the labels as header row and first column.
pub fn correlation_csv(m: &CorrelationMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["language".to_string()];
    header.extend(m.labels.iter().cloned());
    w.write_record(&header)?;
    for (label, row) in m.labels.iter().zip(&m.values) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pruning::RankingKind;
    use proptest::prelude::*;

    fn estimate(i: usize, mean: f64) -> ShapleyEstimate {
        ShapleyEstimate {
            player: PlayerId(i),
            mean,
            variance: 0.001,
            t: 42,
            lower: mean - 0.1,
            upper: mean + 0.1,
            converged: i % 2 == 0,
            reason: if i % 2 == 0 {
                ConvergenceReason::LowerBoundPositive
            } else {
                ConvergenceReason::BudgetExhausted
            },
        }
    }

    #[test]
    fn estimates_header_and_layout() {
        let csv = estimates_csv(&[estimate(0, 0.25), estimate(5, -0.5)], HeadLayout::new(4)).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "player,layer,head,mean,variance,t,lower,upper,converged,reason");
        assert_eq!(lines.next().unwrap(), "0,0,0,0.25,0.001,42,0.15,0.35,true,lower_bound_positive");
        assert!(lines.next().unwrap().starts_with("5,1,1,-0.5,"));
    }

    #[test]
    fn bad_estimates_rejected() {
        assert!(read_estimates_csv("player,mean\n0,1\n").is_err());
        let csv = estimates_csv(&[estimate(0, 0.1)], HeadLayout::new(1)).unwrap();
        assert!(read_estimates_csv(&csv.replace("0.1,", "zz,")).is_err());
    }

    #[test]
    fn curve_and_correlation_layout() {
        let curve = PruningCurve {
            kind: RankingKind::Random,
            points: vec![(0, 0.5), (1, 0.25)],
        };
        assert_eq!(curves_csv(&[curve]).unwrap(), "heads_removed,metric,ranking_kind\n0,0.5,random\n1,0.25,random\n");
        let m = CorrelationMatrix {
            labels: vec!["en".into(), "sw".into()],
            values: vec![vec![1.0, 0.5], vec![0.5, 1.0]],
        };
        assert_eq!(correlation_csv(&m).unwrap(), "language,en,sw\nen,1,0.5\nsw,0.5,1\n");
    }

    #[test]
    fn exact_csv_round_trip() {
        let v = vec![2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
        let csv = exact_csv(&v, HeadLayout::new(3)).unwrap();
        assert!(csv.starts_with("player,layer,head,shapley\n"));
        assert_eq!(read_exact_csv(&csv).unwrap(), v);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_string_atomic(&path, "one").unwrap();
        write_string_atomic(&path, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    proptest! {
        #[test]
        fn estimates_survive_csv(means in prop::collection::vec(-1.0f64..1.0, 1..20)) {
            let ests: Vec<_> = means.iter().enumerate().map(|(i, &m)| estimate(i, m)).collect();
            let back = read_estimates_csv(&estimates_csv(&ests, HeadLayout::new(4)).unwrap()).unwrap();
            prop_assert_eq!(back, ests);
        }
    }
}
