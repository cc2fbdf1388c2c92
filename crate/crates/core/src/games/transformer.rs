//! A small untrained transformer encoder whose attention heads are players.
//!
//! Per layer, the attention sub-layer output is `Σ_h G_h · Att_h(x)` where
//! `Att_h` includes the head's slice of the output projection, followed by a
//! residual add and a two-layer ReLU feed-forward block with its own
//! residual. No layer normalization and no positional encodings. Scores come
//! from a linear classifier over the mean-pooled final states.
//!
//! Weight matrices are uniform in `[-0.1, 0.1]`; biases start at zero. With
//! random biases of the same scale the constant offsets would dominate the
//! input-dependent part of the logits and every input would get one class.

use std::any::Any;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::SyntheticDataset;
use crate::coalition::{Coalition, HeadLayout};
use crate::error::{Error, Result};
use crate::game::{Game, Metric, MetricRange};
use crate::rng::SplitMix64;

const INIT_SCALE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyTransformerSpec {
    pub vocab_size: usize,
    pub model_dim: usize,
    pub layers: usize,
    pub heads_per_layer: usize,
    pub ffn_dim: usize,
    pub n_classes: usize,
    pub weight_seed: u64,
}

impl Default for ToyTransformerSpec {
    fn default() -> Self {
        Self {
            vocab_size: 64,
            model_dim: 32,
            layers: 2,
            heads_per_layer: 4,
            ffn_dim: 64,
            n_classes: 3,
            weight_seed: 0,
        }
    }
}

impl ToyTransformerSpec {
    pub fn n_heads(&self) -> usize {
        self.layers * self.heads_per_layer
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.heads_per_layer
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("model_dim", self.model_dim),
            ("layers", self.layers),
            ("heads_per_layer", self.heads_per_layer),
            ("ffn_dim", self.ffn_dim),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::arg(format!("{name} must be positive")));
        }
        if self.n_classes < 2 {
            return Err(Error::arg("n_classes must be >= 2"));
        }
        if self.model_dim % self.heads_per_layer != 0 {
            return Err(Error::arg(format!(
                "model_dim {} not divisible by heads_per_layer {}",
                self.model_dim, self.heads_per_layer
            )));
        }
        Ok(())
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn random(rows: usize, cols: usize, seed: u64, tag: &str) -> Self {
        let mut rng = SplitMix64::tagged(seed, tag);
        let data = (0..rows * cols).map(|_| rng.uniform(-INIT_SCALE, INIT_SCALE)).collect();
        Self { rows, cols, data }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `self · w`.
    fn matmul(&self, w: &Mat) -> Mat {
        debug_assert_eq!(self.cols, w.rows);
        let mut out = Mat::zeros(self.rows, w.cols);
        for i in 0..self.rows {
            let o = &mut out.data[i * w.cols..(i + 1) * w.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                for (oj, &wj) in o.iter_mut().zip(w.row(k)) {
                    *oj += a * wj;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
struct HeadWeights {
    wq: Mat,
    wk: Mat,
    wv: Mat,
    /// This head's rows of the output projection (head_dim × model_dim).
    wo: Mat,
}

#[derive(Debug, Clone)]
struct LayerWeights {
    heads: Vec<HeadWeights>,
    w1: Mat,
    b1: Vec<f64>,
    w2: Mat,
    b2: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Ablation<'a> {
    None,
    /// Head output replaced by a zero vector before gating.
    Zeroed(&'a [bool]),
    /// Head left out of the attention sum entirely.
    Skipped(&'a [bool]),
    /// Attention sub-layer output forced to zero.
    NoAttention,
}

#[derive(Debug, Clone)]
pub struct ToyTransformer {
    spec: ToyTransformerSpec,
    embedding: Mat,
    layers: Vec<LayerWeights>,
    classifier: Mat,
    classifier_bias: Vec<f64>,
}

impl ToyTransformer {
    /// Builds the model with weights uniform in `[-0.1, 0.1)`, each tensor
    /// drawn from its own SplitMix64 stream keyed by `weight_seed` and name.
    pub fn new(spec: ToyTransformerSpec) -> Result<Self> {
        spec.validate()?;
        let s = spec.weight_seed;
        let (d, hd) = (spec.model_dim, spec.head_dim());
        let layers = (0..spec.layers)
            .map(|l| LayerWeights {
                heads: (0..spec.heads_per_layer)
                    .map(|h| HeadWeights {
                        wq: Mat::random(d, hd, s, &format!("l{l}.h{h}.wq")),
                        wk: Mat::random(d, hd, s, &format!("l{l}.h{h}.wk")),
                        wv: Mat::random(d, hd, s, &format!("l{l}.h{h}.wv")),
                        wo: Mat::random(hd, d, s, &format!("l{l}.h{h}.wo")),
                    })
                    .collect(),
                w1: Mat::random(d, spec.ffn_dim, s, &format!("l{l}.ffn.w1")),
                b1: vec![0.0; spec.ffn_dim],
                w2: Mat::random(spec.ffn_dim, d, s, &format!("l{l}.ffn.w2")),
                b2: vec![0.0; d],
            })
            .collect();
        Ok(Self {
            embedding: Mat::random(spec.vocab_size, d, s, "embedding"),
            classifier: Mat::random(d, spec.n_classes, s, "classifier"),
            classifier_bias: vec![0.0; spec.n_classes],
            layers,
            spec,
        })
    }

    pub fn spec(&self) -> &ToyTransformerSpec {
        &self.spec
    }

    pub fn n_heads(&self) -> usize {
        self.spec.n_heads()
    }

    /// Zeroes the output projection of flat head `player`, so the head
    /// always outputs a zero vector.
    pub fn with_silenced_head(mut self, player: usize) -> Result<Self> {
        if player >= self.n_heads() {
            return Err(Error::arg(format!("head {player} out of range")));
        }
        let hpl = self.spec.heads_per_layer;
        self.layers[player / hpl].heads[player % hpl].wo.data.fill(0.0);
        Ok(self)
    }

    fn check_tokens(&self, tokens: &[u32]) -> Result<()> {
        if tokens.is_empty() {
            return Err(Error::arg("token sequence is empty"));
        }
        if let Some(t) = tokens.iter().find(|&&t| t as usize >= self.spec.vocab_size) {
            return Err(Error::arg(format!("token id {t} outside vocabulary of {}", self.spec.vocab_size)));
        }
        Ok(())
    }

    fn check_gates(&self, gates: &[f64]) -> Result<()> {
        if gates.len() != self.n_heads() {
            return Err(Error::arg(format!("expected {} gates, got {}", self.n_heads(), gates.len())));
        }
        if gates.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::arg("gates must lie in [0, 1]"));
        }
        Ok(())
    }

    fn check_mask(&self, mask: &[bool]) -> Result<()> {
        if mask.len() != self.n_heads() {
            return Err(Error::arg(format!("expected {} head flags, got {}", self.n_heads(), mask.len())));
        }
        Ok(())
    }

    /// Class scores for `tokens` with head gates `gates` (one per head, flat
    /// index `layer * heads_per_layer + head`).
    pub fn forward(&self, gates: &[f64], tokens: &[u32]) -> Result<Vec<f64>> {
        self.check_gates(gates)?;
        self.check_tokens(tokens)?;
        Ok(self.run(gates, &self.embed(tokens), None, Ablation::None))
    }

    /// As [`forward`](Self::forward), but heads flagged in `zeroed` have
    /// their output vectors replaced by zeros before gating.
    pub fn forward_with_zeroed_heads(&self, gates: &[f64], tokens: &[u32], zeroed: &[bool]) -> Result<Vec<f64>> {
        self.check_gates(gates)?;
        self.check_tokens(tokens)?;
        self.check_mask(zeroed)?;
        Ok(self.run(gates, &self.embed(tokens), None, Ablation::Zeroed(zeroed)))
    }

    /// As [`forward`](Self::forward), but heads flagged in `skipped` are left
    /// out of the attention sum.
    pub fn forward_skipping_heads(&self, gates: &[f64], tokens: &[u32], skipped: &[bool]) -> Result<Vec<f64>> {
        self.check_gates(gates)?;
        self.check_tokens(tokens)?;
        self.check_mask(skipped)?;
        Ok(self.run(gates, &self.embed(tokens), None, Ablation::Skipped(skipped)))
    }

    /// Residual and feed-forward path only.
    pub fn forward_without_attention(&self, tokens: &[u32]) -> Result<Vec<f64>> {
        self.check_tokens(tokens)?;
        let ones = vec![1.0; self.n_heads()];
        Ok(self.run(&ones, &self.embed(tokens), None, Ablation::NoAttention))
    }

    /// Unvalidated forward pass; gates may lie outside `[0, 1]`.
    pub(crate) fn forward_raw(&self, gates: &[f64], tokens: &[u32]) -> Vec<f64> {
        self.run(gates, &self.embed(tokens), None, Ablation::None)
    }

    fn embed(&self, tokens: &[u32]) -> Mat {
        let d = self.spec.model_dim;
        let mut x = Mat::zeros(tokens.len(), d);
        for (i, &t) in tokens.iter().enumerate() {
            x.data[i * d..(i + 1) * d].copy_from_slice(self.embedding.row(t as usize));
        }
        x
    }

    /// `Att_h(x)`: scaled dot-product self-attention through the head's
    /// slice of the output projection. Shape seq × model_dim.
    fn head_output(&self, head: &HeadWeights, x: &Mat) -> Mat {
        let q = x.matmul(&head.wq);
        let k = x.matmul(&head.wk);
        let v = x.matmul(&head.wv);
        let n = x.rows;
        let scale = 1.0 / (self.spec.head_dim() as f64).sqrt();
        let mut ctx = Mat::zeros(n, v.cols);
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let qi = q.row(i);
            for (j, w) in weights.iter_mut().enumerate() {
                *w = qi.iter().zip(k.row(j)).map(|(a, b)| a * b).sum::<f64>() * scale;
            }
            let max = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for w in weights.iter_mut() {
                *w = (*w - max).exp();
                total += *w;
            }
            let out = &mut ctx.data[i * v.cols..(i + 1) * v.cols];
            for (j, w) in weights.iter().enumerate() {
                let a = w / total;
                for (o, vj) in out.iter_mut().zip(v.row(j)) {
                    *o += a * vj;
                }
            }
        }
        ctx.matmul(&head.wo)
    }

    fn layer_heads(&self, layer: usize, x: &Mat) -> Vec<Mat> {
        self.layers[layer].heads.iter().map(|h| self.head_output(h, x)).collect()
    }

    fn feed_forward(&self, layer: &LayerWeights, x: &Mat) -> Mat {
        let mut hidden = x.matmul(&layer.w1);
        for row in hidden.data.chunks_mut(layer.w1.cols) {
            for (h, b) in row.iter_mut().zip(&layer.b1) {
                *h = (*h + b).max(0.0);
            }
        }
        let mut out = hidden.matmul(&layer.w2);
        for (row, xr) in out.data.chunks_mut(layer.w2.cols).zip(x.data.chunks(x.cols)) {
            for ((o, b), xv) in row.iter_mut().zip(&layer.b2).zip(xr) {
                *o = xv + (*o + b);
            }
        }
        out
    }

    /// Shared forward path. `layer0_heads` may carry precomputed head
    /// outputs for the first layer, which do not depend on the gates.
    fn run(&self, gates: &[f64], x0: &Mat, layer0_heads: Option<&[Mat]>, ablation: Ablation<'_>) -> Vec<f64> {
        let hpl = self.spec.heads_per_layer;
        let mut x = x0.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let computed;
            let heads: &[Mat] = match (l, layer0_heads) {
                (0, Some(cached)) => cached,
                _ => {
                    computed = if matches!(ablation, Ablation::NoAttention) {
                        Vec::new()
                    } else {
                        self.layer_heads(l, &x)
                    };
                    &computed
                }
            };
            let mut attn = Mat::zeros(x.rows, x.cols);
            if !matches!(ablation, Ablation::NoAttention) {
                for (h, out) in heads.iter().enumerate() {
                    let idx = l * hpl + h;
                    let g = gates[idx];
                    match ablation {
                        Ablation::Skipped(mask) if mask[idx] => continue,
                        Ablation::Zeroed(mask) if mask[idx] => {
                            for a in attn.data.iter_mut() {
                                *a += g * 0.0;
                            }
                        }
                        _ => {
                            for (a, o) in attn.data.iter_mut().zip(&out.data) {
                                *a += g * o;
                            }
                        }
                    }
                }
            }
            for (xv, a) in x.data.iter_mut().zip(&attn.data) {
                *xv += a;
            }
            x = self.feed_forward(layer, &x);
        }
        let n = x.rows as f64;
        let mut pooled = Mat::zeros(1, x.cols);
        for i in 0..x.rows {
            for (p, v) in pooled.data.iter_mut().zip(x.row(i)) {
                *p += v;
            }
        }
        for p in pooled.data.iter_mut() {
            *p /= n;
        }
        let mut scores = pooled.matmul(&self.classifier).data;
        for (s, b) in scores.iter_mut().zip(&self.classifier_bias) {
            *s += b;
        }
        scores
    }
}

/// Builds the model from `spec` and runs one gated forward pass.
pub fn transformer_forward(spec: &ToyTransformerSpec, gates: &[f64], tokens: &[u32]) -> Result<Vec<f64>> {
    ToyTransformer::new(spec.clone())?.forward(gates, tokens)
}

/// Index of the largest score; ties go to the lower class.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

struct CachedExample {
    x0: Mat,
    layer0_heads: Vec<Mat>,
}

/// Accuracy of the gated transformer on a dataset; players are heads.
pub struct TransformerGame {
    model: ToyTransformer,
    dataset: SyntheticDataset,
    cache: Vec<CachedExample>,
}

impl std::fmt::Debug for TransformerGame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransformerGame")
            .field("spec", &self.model.spec)
            .field("examples", &self.dataset.len())
            .finish()
    }
}

impl TransformerGame {
    pub fn new(model: ToyTransformer, dataset: SyntheticDataset) -> Result<Self> {
        dataset.check_against(&model.spec)?;
        if dataset.is_empty() {
            return Err(Error::arg("dataset is empty"));
        }
        let cache = dataset
            .sequences
            .par_iter()
            .map(|seq| {
                let x0 = model.embed(seq);
                let layer0_heads = model.layer_heads(0, &x0);
                CachedExample { x0, layer0_heads }
            })
            .collect();
        Ok(Self { model, dataset, cache })
    }

    pub fn model(&self) -> &ToyTransformer {
        &self.model
    }

    pub fn dataset(&self) -> &SyntheticDataset {
        &self.dataset
    }

    /// Fraction of examples classified correctly under `gates`.
    pub fn accuracy(&self, gates: &[f64]) -> f64 {
        let correct: usize = self
            .cache
            .par_iter()
            .zip(self.dataset.labels.par_iter())
            .map(|(ex, &label)| {
                let scores = self.model.run(gates, &ex.x0, Some(&ex.layer0_heads), Ablation::None);
                usize::from(argmax(&scores) == label)
            })
            .sum();
        correct as f64 / self.dataset.len() as f64
    }
}

impl Metric for TransformerGame {
    fn n_players(&self) -> usize {
        self.model.n_heads()
    }

    fn metric_range(&self) -> MetricRange {
        MetricRange::UNIT
    }

    fn raw_metric(&self, coalition: &Coalition) -> Result<f64> {
        Ok(self.accuracy(&coalition.gates()))
    }

    fn descriptor(&self) -> String {
        format!(
            "transformer:{}:{}:{}:{}:{}",
            serde_json::to_string(&self.model.spec).unwrap_or_default(),
            self.dataset.language,
            self.dataset.len(),
            self.dataset.seq_len(),
            self.dataset.seed
        )
    }

    fn head_layout(&self) -> HeadLayout {
        HeadLayout::new(self.model.spec.heads_per_layer)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub fn make_transformer_game(spec: &ToyTransformerSpec, dataset: SyntheticDataset) -> Result<Game> {
    Game::new(TransformerGame::new(ToyTransformer::new(spec.clone())?, dataset)?)
}
