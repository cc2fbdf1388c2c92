//! Synthetic classification data for the transformer game.
//!
//! Each language owns a contiguous (wrapping) half of the vocabulary and a
//! set of `n_classes` marker tokens inside it. Every sequence is filler from
//! the language range plus exactly one marker at a random position; the label
//! is the index of that marker. Labels are assigned round-robin, so classes
//! are balanced to within one example.

use serde::{Deserialize, Serialize};

use super::transformer::ToyTransformerSpec;
use crate::error::{Error, Result};
use crate::rng::{tag_hash, SplitMix64};

pub const DEFAULT_SEQ_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub sequences: Vec<Vec<u32>>,
    pub labels: Vec<usize>,
    pub language: String,
    pub seed: u64,
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn seq_len(&self) -> usize {
        self.sequences.first().map_or(0, Vec::len)
    }

    /// Marker token ids of `language`, one per class.
    pub fn markers(spec: &ToyTransformerSpec, language: &str) -> Result<Vec<u32>> {
        Ok(LanguageRange::new(spec, language)?.markers)
    }

    pub fn check_against(&self, spec: &ToyTransformerSpec) -> Result<()> {
        if self.sequences.len() != self.labels.len() {
            return Err(Error::arg("dataset has mismatched sequence and label counts"));
        }
        if let Some(l) = self.labels.iter().find(|&&l| l >= spec.n_classes) {
            return Err(Error::arg(format!("label {l} outside [0, {})", spec.n_classes)));
        }
        for seq in &self.sequences {
            if seq.is_empty() {
                return Err(Error::arg("empty token sequence"));
            }
            if let Some(t) = seq.iter().find(|&&t| t as usize >= spec.vocab_size) {
                return Err(Error::arg(format!("token {t} outside vocabulary of {}", spec.vocab_size)));
            }
        }
        Ok(())
    }
}

struct LanguageRange {
    start: usize,
    width: usize,
    vocab: usize,
    markers: Vec<u32>,
    fillers: Vec<u32>,
}

impl LanguageRange {
    fn new(spec: &ToyTransformerSpec, language: &str) -> Result<Self> {
        let vocab = spec.vocab_size;
        let width = vocab / 2;
        if width < spec.n_classes + 1 {
            return Err(Error::arg(format!(
                "vocabulary of {vocab} too small for {} marker classes plus filler",
                spec.n_classes
            )));
        }
        let lang_key = tag_hash(language);
        let start = (lang_key % vocab as u64) as usize;
        let mut offsets: Vec<usize> = (0..width).collect();
        SplitMix64::tagged(lang_key, "markers").shuffle(&mut offsets);
        let token = |off: usize| ((start + off) % vocab) as u32;
        let markers = offsets[..spec.n_classes].iter().map(|&o| token(o)).collect();
        let mut filler_offsets = offsets[spec.n_classes..].to_vec();
        filler_offsets.sort_unstable();
        let fillers = filler_offsets.into_iter().map(token).collect();
        Ok(Self {
            start,
            width,
            vocab,
            markers,
            fillers,
        })
    }
}

/// Generates `size` sequences of [`DEFAULT_SEQ_LEN`] tokens.
pub fn generate_synthetic_dataset(
    spec: &ToyTransformerSpec,
    language: &str,
    size: usize,
    seed: u64,
) -> Result<SyntheticDataset> {
    generate_with_len(spec, language, size, DEFAULT_SEQ_LEN, seed)
}

pub fn generate_with_len(
    spec: &ToyTransformerSpec,
    language: &str,
    size: usize,
    seq_len: usize,
    seed: u64,
) -> Result<SyntheticDataset> {
    spec.validate()?;
    if size == 0 {
        return Err(Error::arg("dataset size must be >= 1"));
    }
    if seq_len == 0 {
        return Err(Error::arg("sequence length must be >= 1"));
    }
    let range = LanguageRange::new(spec, language)?;
    debug_assert!(range.start < range.vocab && range.width <= range.vocab);
    let stream_key = seed ^ tag_hash(language);
    let mut sequences = Vec::with_capacity(size);
    let mut labels = Vec::with_capacity(size);
    for i in 0..size {
        let label = i % spec.n_classes;
        let mut rng = SplitMix64::keyed(stream_key, i as u64);
        let mut seq: Vec<u32> = (0..seq_len)
            .map(|_| range.fillers[rng.below(range.fillers.len() as u64) as usize])
            .collect();
        let pos = rng.below(seq_len as u64) as usize;
        seq[pos] = range.markers[label];
        sequences.push(seq);
        labels.push(label);
    }
    Ok(SyntheticDataset {
        sequences,
        labels,
        language: language.to_string(),
        seed,
    })
}
