//! Spearman rank correlation across per-language value profiles.

use crate::error::{Error, Result};

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share rank mean((i+1)..=j)
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman ρ with average-rank tie handling (Pearson correlation of ranks).
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::arg(format!("sequence lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::arg("spearman needs at least two values"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::arg("spearman input contains NaN"));
    }
    pearson(&average_ranks(a), &average_ranks(b))
        .ok_or_else(|| Error::UndefinedCorrelation("constant input sequence".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    /// Mean off-diagonal ρ of each row.
    pub fn row_means(&self) -> Vec<f64> {
        let n = self.labels.len();
        self.values
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).sum::<f64>() / (n - 1) as f64)
            .collect()
    }

    /// Label whose mean off-diagonal ρ is smallest.
    pub fn least_correlated(&self) -> &str {
        let means = self.row_means();
        let idx = (0..means.len())
            .min_by(|&a, &b| means[a].total_cmp(&means[b]))
            .expect("at least two labels");
        &self.labels[idx]
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.values[i][j])
    }
}

/// Pairwise Spearman ρ of labelled value profiles (typically per-language
/// mean Shapley estimates). Symmetric with unit diagonal.
pub fn correlation_matrix(profiles: &[(String, Vec<f64>)]) -> Result<CorrelationMatrix> {
    if profiles.len() < 2 {
        return Err(Error::arg("correlation matrix needs at least two profiles"));
    }
    let n = profiles[0].1.len();
    if let Some((label, _)) = profiles.iter().find(|(_, v)| v.len() != n) {
        return Err(Error::arg(format!("profile {label:?} has a different player count")));
    }
    let k = profiles.len();
    let mut values = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let rho = spearman_rho(&profiles[i].1, &profiles[j].1).map_err(|e| match e {
                Error::UndefinedCorrelation(m) => {
                    Error::UndefinedCorrelation(format!("{} vs {}: {m}", profiles[i].0, profiles[j].0))
                }
                other => other,
            })?;
            values[i][j] = rho;
            values[j][i] = rho;
        }
    }
    Ok(CorrelationMatrix {
        labels: profiles.iter().map(|(l, _)| l.clone()).collect(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `1 - 6 Σd² / (n(n²-1))`, valid without ties.
    fn rank_difference_formula(a: &[f64], b: &[f64]) -> f64 {
        let (ra, rb) = (average_ranks(a), average_ranks(b));
        let n = a.len() as f64;
        let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
        1.0 - 6.0 * d2 / (n * (n * n - 1.0))
    }

    #[test]
    fn identical_reversed_and_swapped() {
        let a = [0.3, -0.1, 0.7, 0.2];
        assert!((spearman_rho(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let rev: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((spearman_rho(&a, &rev).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman_rho(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(average_ranks(&[0.1, 0.1, 0.5]), vec![1.5, 1.5, 3.0]);
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 3.0]), vec![3.0, 1.0, 3.0, 3.0]);
        // scipy.stats.spearmanr([1,2,2,3],[1,2,3,4]) = 0.9486832980505138
        let r = spearman_rho(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((r - 0.9486832980505138).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::UndefinedCorrelation(_))));
        assert!(matches!(spearman_rho(&[1.0], &[1.0]), Err(Error::Argument(_))));
        assert!(matches!(spearman_rho(&[1.0, 2.0], &[1.0]), Err(Error::Argument(_))));
        let profiles = vec![("en".to_string(), vec![1.0, 2.0]), ("sw".to_string(), vec![3.0, 3.0])];
        let err = correlation_matrix(&profiles).unwrap_err();
        assert!(err.to_string().contains("en vs sw"), "{err}");
    }

    #[test]
    fn matrix_identical_profiles() {
        let v = vec![0.1, 0.5, -0.2];
        let m = correlation_matrix(&[("a".into(), v.clone()), ("b".into(), v)]).unwrap();
        assert_eq!(m.values, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    }

    proptest! {
        #[test]
        fn matches_rank_difference_formula_without_ties(
            a in prop::collection::hash_set(-1000i32..1000, 3..30),
            seed in any::<u64>(),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let mut b = a.clone();
            crate::rng::SplitMix64::new(seed).shuffle(&mut b);
            let rho = spearman_rho(&a, &b).unwrap();
            prop_assert!((rho - rank_difference_formula(&a, &b)).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&rho));
            prop_assert_eq!(rho.to_bits(), spearman_rho(&b, &a).unwrap().to_bits());
        }
    }
}
