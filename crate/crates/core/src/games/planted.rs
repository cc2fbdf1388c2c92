//! Planted multilingual game family.
//!
//! One game per language tag. For language `l`:
//!
//! ```text
//! metric_l(S) = clamp(base[l] + Σ_{i∈S} c[i][l] + Σ_{{i,j}⊆S} d[i][j] + noise(S, seed, l))
//! ```
//!
//! `noise` is a pure hash of the coalition bits, the seed and the language,
//! uniform in `[-noise_scale, noise_scale]`, so each game stays a
//! well-defined characteristic function.

use std::any::Any;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coalition::{Coalition, HeadLayout};
use crate::error::{Error, Result};
use crate::game::{Game, Metric, MetricRange};
use crate::rng::{mix64, tag_hash};

/// One unordered interaction term `d[i][j]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTerm {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedMultilingualSpec {
    pub n_players: usize,
    pub languages: Vec<String>,
    /// Per-language base metric, aligned with `languages`.
    pub base: Vec<f64>,
    /// `coeff[player][language]`.
    pub coeff: Vec<Vec<f64>>,
    #[serde(default)]
    pub pairwise: Vec<PairwiseTerm>,
    #[serde(default)]
    pub noise_scale: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "unit_min")]
    pub metric_min: f64,
    #[serde(default = "unit_max")]
    pub metric_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heads_per_layer: Option<usize>,
}

fn unit_min() -> f64 {
    0.0
}

fn unit_max() -> f64 {
    1.0
}

impl PlantedMultilingualSpec {
    /// Desk-scale interference scenario: 12 players laid out as 3 layers of
    /// 4 heads, languages `en`, `de`, `zh`, `sw`. The first three languages
    /// share one coefficient profile up to small perturbations; `sw` is an
    /// outlier whose profile is reshuffled, and player 5 (layer 1, head 1)
    /// is harmful for every language except `sw`. Every |c| ≥ 0.02.
    pub fn interference_demo(noise_scale: f64, seed: u64) -> Self {
        let en = [0.060, 0.045, -0.030, 0.050, 0.025, -0.050, 0.035, -0.025, 0.070, 0.020, -0.040, 0.030];
        let de = [0.055, 0.050, -0.035, 0.045, 0.030, -0.045, 0.030, -0.020, 0.065, 0.025, -0.045, 0.035];
        let zh = [0.065, 0.040, -0.025, 0.055, 0.020, -0.060, 0.040, -0.030, 0.075, 0.020, -0.035, 0.025];
        let sw = [0.020, 0.060, 0.030, -0.025, 0.045, 0.050, -0.030, 0.035, 0.025, 0.070, -0.040, -0.020];
        let coeff = (0..12).map(|i| vec![en[i], de[i], zh[i], sw[i]]).collect();
        Self {
            n_players: 12,
            languages: ["en", "de", "zh", "sw"].iter().map(|s| s.to_string()).collect(),
            base: vec![0.5, 0.45, 0.42, 0.35],
            coeff,
            pairwise: Vec::new(),
            noise_scale,
            seed,
            metric_min: 0.0,
            metric_max: 1.0,
            heads_per_layer: Some(4),
        }
    }

    pub fn language_index(&self, language: &str) -> Result<usize> {
        self.languages
            .iter()
            .position(|l| l == language)
            .ok_or_else(|| Error::arg(format!("unknown language {language:?}")))
    }

    /// Coefficient column `c[·][language]`.
    pub fn column(&self, language: &str) -> Result<Vec<f64>> {
        let l = self.language_index(language)?;
        Ok(self.coeff.iter().map(|row| row[l]).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_players == 0 {
            return Err(Error::arg("planted game needs at least one player"));
        }
        if self.languages.is_empty() {
            return Err(Error::arg("planted family needs at least one language"));
        }
        if self.base.len() != self.languages.len() {
            return Err(Error::arg(format!(
                "base has {} entries for {} languages",
                self.base.len(),
                self.languages.len()
            )));
        }
        if self.coeff.len() != self.n_players {
            return Err(Error::arg(format!(
                "coeff has {} rows for {} players",
                self.coeff.len(),
                self.n_players
            )));
        }
        if let Some(row) = self.coeff.iter().position(|r| r.len() != self.languages.len()) {
            return Err(Error::arg(format!(
                "coeff row {row} has {} columns for {} languages",
                self.coeff[row].len(),
                self.languages.len()
            )));
        }
        let mut dedup = self.languages.clone();
        dedup.sort();
        dedup.dedup();
        if dedup.len() != self.languages.len() {
            return Err(Error::arg("duplicate language tag"));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::arg("noise_scale must be finite and >= 0"));
        }
        if let Some(h) = self.heads_per_layer {
            if h == 0 {
                return Err(Error::arg("heads_per_layer must be positive"));
            }
        }
        MetricRange::new(self.metric_min, self.metric_max)?;
        self.normalized_pairs()?;
        Ok(())
    }

    /// Pairwise terms as `(min, max, value)`, sorted, with symmetric
    /// duplicates merged.
    fn normalized_pairs(&self) -> Result<Vec<(usize, usize, f64)>> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for t in &self.pairwise {
            if t.i >= self.n_players || t.j >= self.n_players {
                return Err(Error::arg(format!("pairwise term ({}, {}) out of range", t.i, t.j)));
            }
            if t.i == t.j {
                return Err(Error::arg("pairwise matrix must have a zero diagonal"));
            }
            let key = (t.i.min(t.j), t.i.max(t.j));
            match map.get(&key) {
                Some(v) if *v != t.value => {
                    return Err(Error::arg(format!("pairwise matrix not symmetric at {key:?}")));
                }
                _ => {
                    map.insert(key, t.value);
                }
            }
        }
        Ok(map.into_iter().map(|((i, j), v)| (i, j, v)).collect())
    }

    /// True when no coalition can push language `l` outside the metric
    /// range, i.e. clamping never binds and values are exactly additive.
    pub fn is_clamp_free(&self, l: usize) -> bool {
        let pairs: Vec<f64> = self.normalized_pairs().unwrap_or_default().iter().map(|p| p.2).collect();
        let col = self.coeff.iter().map(|r| r[l]);
        let lo = self.base[l]
            + col.clone().map(|c| c.min(0.0)).sum::<f64>()
            + pairs.iter().map(|d| d.min(0.0)).sum::<f64>()
            - self.noise_scale;
        let hi = self.base[l]
            + col.map(|c| c.max(0.0)).sum::<f64>()
            + pairs.iter().map(|d| d.max(0.0)).sum::<f64>()
            + self.noise_scale;
        lo >= self.metric_min && hi <= self.metric_max
    }
}

#[derive(Debug)]
pub struct PlantedMetric {
    language: String,
    base: f64,
    coeff: Vec<f64>,
    pairs: Vec<(usize, usize, f64)>,
    noise_scale: f64,
    noise_key: u64,
    range: MetricRange,
    heads_per_layer: Option<usize>,
    descriptor: String,
}

impl PlantedMetric {
    pub fn language(&self) -> &str {
        &self.language
    }

    fn noise(&self, coalition: &Coalition) -> f64 {
        let mut h = self.noise_key;
        for (k, w) in coalition.words().iter().enumerate() {
            h = mix64(h ^ mix64(w.wrapping_add(k as u64)));
        }
        let u = (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        self.noise_scale * (2.0 * u - 1.0)
    }
}

impl Metric for PlantedMetric {
    fn n_players(&self) -> usize {
        self.coeff.len()
    }

    fn metric_range(&self) -> MetricRange {
        self.range
    }

    fn raw_metric(&self, coalition: &Coalition) -> Result<f64> {
        let mut v = self.base;
        for p in coalition.members() {
            v += self.coeff[p.0];
        }
        for &(i, j, d) in &self.pairs {
            if coalition.contains(crate::PlayerId(i)) && coalition.contains(crate::PlayerId(j)) {
                v += d;
            }
        }
        if self.noise_scale > 0.0 {
            v += self.noise(coalition);
        }
        Ok(self.range.clamp(v))
    }

    fn descriptor(&self) -> String {
        self.descriptor.clone()
    }

    fn head_layout(&self) -> HeadLayout {
        HeadLayout::new(self.heads_per_layer.unwrap_or(self.coeff.len()))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// The game for a single language of the family.
pub fn make_planted_game(spec: &PlantedMultilingualSpec, language: &str) -> Result<Game> {
    spec.validate()?;
    let l = spec.language_index(language)?;
    if !spec.is_clamp_free(l) {
        log::warn!("planted game for {language:?} is not clamp-free; metric will be clamped");
    }
    let metric = PlantedMetric {
        language: language.to_string(),
        base: spec.base[l],
        coeff: spec.coeff.iter().map(|r| r[l]).collect(),
        pairs: spec.normalized_pairs()?,
        noise_scale: spec.noise_scale,
        noise_key: mix64(spec.seed ^ mix64(tag_hash(language))),
        range: MetricRange::new(spec.metric_min, spec.metric_max)?,
        heads_per_layer: spec.heads_per_layer,
        descriptor: format!(
            "planted:{}:{}",
            language,
            serde_json::to_string(spec).unwrap_or_default()
        ),
    };
    Game::new(metric)
}

/// One game per language, keyed by tag.
pub fn make_planted_family(spec: &PlantedMultilingualSpec) -> Result<BTreeMap<String, Game>> {
    spec.validate()?;
    spec.languages
        .iter()
        .map(|l| Ok((l.clone(), make_planted_game(spec, l)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalition::PlayerId;

    fn two_lang(coeff: Vec<Vec<f64>>) -> PlantedMultilingualSpec {
        PlantedMultilingualSpec {
            n_players: coeff.len(),
            languages: vec!["en".into(), "sw".into()],
            base: vec![0.5, 0.4],
            coeff,
            pairwise: vec![],
            noise_scale: 0.0,
            seed: 1,
            metric_min: 0.0,
            metric_max: 1.0,
            heads_per_layer: None,
        }
    }

    #[test]
    fn singleton_equals_coefficient() {
        let spec = PlantedMultilingualSpec::interference_demo(0.0, 0);
        let family = make_planted_family(&spec).unwrap();
        for (lang, game) in &family {
            let col = spec.column(lang).unwrap();
            for h in 0..spec.n_players {
                let s = Coalition::empty(spec.n_players).with(PlayerId(h)).unwrap();
                let v = game.evaluate_adjusted(&s).unwrap();
                assert!((v - col[h]).abs() < 1e-15, "{lang} {h}: {v} vs {}", col[h]);
            }
        }
    }

    #[test]
    fn demo_is_clamp_free_and_outlier_is_positive_only_for_sw() {
        let spec = PlantedMultilingualSpec::interference_demo(0.01, 0);
        spec.validate().unwrap();
        for l in 0..spec.languages.len() {
            assert!(spec.is_clamp_free(l));
        }
        for (l, lang) in spec.languages.iter().enumerate() {
            assert_eq!(spec.coeff[5][l] > 0.0, lang == "sw");
        }
        assert!(spec.coeff.iter().flatten().all(|c| c.abs() >= 0.02));
    }

    #[test]
    fn noise_is_deterministic_and_bounded() {
        let mut spec = two_lang(vec![vec![0.05, 0.05]; 6]);
        spec.noise_scale = 0.01;
        let g = make_planted_game(&spec, "en").unwrap();
        let g2 = make_planted_game(&spec, "en").unwrap();
        let sw = make_planted_game(&spec, "sw").unwrap();
        let mut differs = false;
        for mask in 0u64..64 {
            let c = Coalition::from_mask(6, mask).unwrap();
            let a = g.raw_metric(&c).unwrap();
            assert_eq!(a.to_bits(), g2.raw_metric(&c).unwrap().to_bits());
            let clean = 0.5 + 0.05 * c.len() as f64;
            assert!((a - clean).abs() <= 0.01 + 1e-12);
            differs |= (sw.raw_metric(&c).unwrap() - 0.4 - 0.05 * c.len() as f64 - (a - clean)).abs() > 1e-9;
        }
        assert!(differs, "noise should depend on the language");
    }

    #[test]
    fn pairwise_added_once_per_pair() {
        let mut spec = two_lang(vec![vec![0.0, 0.0]; 4]);
        spec.pairwise = vec![PairwiseTerm { i: 2, j: 3, value: 0.02 }, PairwiseTerm { i: 3, j: 2, value: 0.02 }];
        let g = make_planted_game(&spec, "en").unwrap();
        assert!((g.grand_value().unwrap() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn dimension_errors() {
        let mut spec = two_lang(vec![vec![0.1, 0.1]; 3]);
        spec.base = vec![0.5];
        assert!(matches!(make_planted_family(&spec), Err(Error::Argument(_))));
        let mut spec = two_lang(vec![vec![0.1]; 3]);
        spec.base = vec![0.5, 0.5];
        assert!(matches!(make_planted_family(&spec), Err(Error::Argument(_))));
        let mut spec = two_lang(vec![vec![0.1, 0.1]; 3]);
        spec.pairwise = vec![PairwiseTerm { i: 1, j: 1, value: 0.1 }];
        assert!(matches!(make_planted_family(&spec), Err(Error::Argument(_))));
        let mut spec = two_lang(vec![vec![0.1, 0.1]; 3]);
        spec.pairwise = vec![PairwiseTerm { i: 0, j: 1, value: 0.1 }, PairwiseTerm { i: 1, j: 0, value: 0.2 }];
        assert!(matches!(make_planted_family(&spec), Err(Error::Argument(_))));
        assert!(make_planted_game(&two_lang(vec![vec![0.1, 0.1]; 3]), "xx").is_err());
    }
}
