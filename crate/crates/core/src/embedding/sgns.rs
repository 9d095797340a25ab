//! Skip-gram with negative sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::store::{NormFlag, VectorStore};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Word-vector training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgnsParams {
    pub dim: usize,
    /// Maximum context distance. Each center samples an effective window
    /// uniformly from `1..=window`.
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    /// Initial learning rate, decayed linearly to `learning_rate * 1e-4`.
    pub learning_rate: f32,
    /// Frequent-word subsampling threshold; `None` disables subsampling.
    pub subsample: Option<f64>,
    /// Exponent applied to unigram counts for the negative-sampling table.
    pub unigram_power: f64,
    pub seed: u64,
}

impl Default for SgnsParams {
    fn default() -> Self {
        SgnsParams {
            dim: 300,
            window: 8,
            epochs: 5,
            negatives: 5,
            learning_rate: 0.025,
            subsample: None,
            unigram_power: 0.75,
            seed: 1,
        }
    }
}

/// Word vectors, one row per vocabulary term.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    terms: Vec<String>,
    fingerprint: u32,
    data: Vec<f32>,
    params: SgnsParams,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn row(&self, index: u32) -> &[f32] {
        let i = index as usize;
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn vocab_fingerprint(&self) -> u32 {
        self.fingerprint
    }

    pub fn params(&self) -> &SgnsParams {
        &self.params
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// The matrix in vector-store layout with terms as ids.
    pub fn to_store(&self) -> VectorStore {
        let mut store = VectorStore::new(self.dim);
        for (i, t) in self.terms.iter().enumerate() {
            store.push_slice(t.clone(), NormFlag::Raw, self.row(i as u32)).expect("terms are unique and rows finite");
        }
        store
    }

    /// Rebuilds a matrix from its vector-store form. `params` come from the
    /// metadata written next to the store.
    pub fn from_store(store: &VectorStore, params: SgnsParams) -> Result<Self> {
        if store.is_empty() {
            return Err(Error::Empty("embedding store"));
        }
        if store.dim() != params.dim {
            return Err(Error::DimensionMismatch { expected: params.dim, found: store.dim() });
        }
        let terms = store.ids().to_vec();
        let mut data = Vec::with_capacity(store.len() * store.dim());
        for i in 0..store.len() {
            data.extend_from_slice(store.vector(i));
        }
        let mut h = crc32fast::Hasher::new();
        for t in &terms {
            h.update(t.as_bytes());
            h.update(&[0]);
        }
        Ok(EmbeddingMatrix { dim: store.dim(), terms, fingerprint: h.finalize(), data, params })
    }

    /// Cosine between two word vectors; `None` if either is zero.
    pub fn word_cosine(&self, a: u32, b: u32) -> Option<f64> {
        let (x, y) = (self.row(a), self.row(b));
        let dot: f64 = x.iter().zip(y).map(|(&p, &q)| p as f64 * q as f64).sum();
        let nx: f64 = x.iter().map(|&p| p as f64 * p as f64).sum::<f64>().sqrt();
        let ny: f64 = y.iter().map(|&p| p as f64 * p as f64).sum::<f64>().sqrt();
        (nx > 0.0 && ny > 0.0).then(|| dot / (nx * ny))
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow for large |x|.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative-sampling loss of one (center, context, negatives) triple:
/// `-ln σ(u_o·v_c) - Σ_k ln σ(-u_k·v_c)`.
pub fn sgns_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    let mut loss = -log_sigmoid(dot(context, center));
    for n in negatives {
        loss -= log_sigmoid(-dot(n, center));
    }
    loss
}

/// Analytic gradients of [`sgns_loss`], returned as
/// `(d/d center, d/d context, [d/d negative_k])`.
pub fn sgns_gradients(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let gpos = sigmoid(dot(context, center)) - 1.0;
    let mut g_center: Vec<f64> = context.iter().map(|u| gpos * u).collect();
    let g_context = center.iter().map(|v| gpos * v).collect();
    let mut g_negs = Vec::with_capacity(negatives.len());
    for n in negatives {
        let gneg = sigmoid(dot(n, center));
        for (g, u) in g_center.iter_mut().zip(n.iter()) {
            *g += gneg * u;
        }
        g_negs.push(center.iter().map(|v| gneg * v).collect());
    }
    (g_center, g_context, g_negs)
}

/// One SGD step on a (center, target) group. `targets[0]` is the observed
/// context with label 1; the remainder are negatives with label 0. The
/// center's gradient is accumulated against the pre-update output rows.
fn update_group(
    center_row: &mut [f32],
    output: &mut [f32],
    dim: usize,
    targets: &[(u32, f64)],
    lr: f64,
    scratch: &mut [f64],
) {
    scratch.iter_mut().for_each(|s| *s = 0.0);
    for &(t, label) in targets {
        let row = &mut output[t as usize * dim..(t as usize + 1) * dim];
        let f: f64 = center_row.iter().zip(row.iter()).map(|(&a, &b)| a as f64 * b as f64).sum();
        let g = (label - sigmoid(f)) * lr;
        for ((s, o), &c) in scratch.iter_mut().zip(row.iter_mut()).zip(center_row.iter()) {
            *s += g * *o as f64;
            *o = (*o as f64 + g * c as f64) as f32;
        }
    }
    for (c, s) in center_row.iter_mut().zip(scratch.iter()) {
        *c = (*c as f64 + s) as f32;
    }
}

struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn new(freq: &[u64], power: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = freq
            .iter()
            .map(|&f| {
                acc += (f as f64).powf(power);
                acc
            })
            .collect();
        NegativeTable { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let x = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= x).min(self.cumulative.len() - 1) as u32
    }
}

fn check_params(params: &SgnsParams) -> Result<()> {
    if params.dim < 1 {
        return Err(Error::Config("embedding dimension must be at least 1".into()));
    }
    if params.window < 1 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(Error::Config("learning rate must be positive".into()));
    }
    if let Some(s) = params.subsample {
        if s.is_nan() || s <= 0.0 {
            return Err(Error::Config("subsample threshold must be positive".into()));
        }
    }
    Ok(())
}

/// Seeded initial input vectors, uniform in `[-0.5/D, 0.5/D]`.
fn initial_matrix(vocab_len: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let scale = 1.0 / dim as f32;
    (0..vocab_len * dim).map(|_| (rng.random::<f32>() - 0.5) * scale).collect()
}

/// Trains word vectors on encoded documents.
///
/// Training is sequential and fully determined by `params.seed`: two runs on
/// the same input produce bit-identical matrices.
pub fn train_sgns(docs: &[Vec<u32>], vocab: &Vocabulary, params: &SgnsParams) -> Result<EmbeddingMatrix> {
    check_params(params)?;
    if docs.is_empty() || docs.iter().all(|d| d.is_empty()) {
        return Err(Error::Empty("training documents"));
    }
    if vocab.is_empty() {
        return Err(Error::Empty("vocabulary"));
    }
    let dim = params.dim;
    let n = vocab.len();
    if let Some(&bad) = docs.iter().flatten().find(|&&t| t as usize >= n) {
        return Err(Error::UnknownTerm(bad as usize));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut input = initial_matrix(n, dim, &mut rng);
    let mut output = vec![0.0f32; n * dim];
    let table = NegativeTable::new(vocab.frequencies(), params.unigram_power);

    let total_tokens: u64 = docs.iter().map(|d| d.len() as u64).sum();
    let total_words: u64 = vocab.frequencies().iter().sum();
    let keep_prob: Option<Vec<f64>> = params.subsample.map(|s| {
        vocab
            .frequencies()
            .iter()
            .map(|&f| {
                let ratio = f as f64 / (s * total_words as f64);
                ((ratio.sqrt() + 1.0) / ratio).min(1.0)
            })
            .collect()
    });
    let planned = (params.epochs as u64 * total_tokens).max(1) as f64;
    let lr0 = params.learning_rate as f64;
    let min_lr = lr0 * 1e-4;

    let mut processed: u64 = 0;
    let mut scratch = vec![0.0f64; dim];
    let mut targets: Vec<(u32, f64)> = Vec::with_capacity(params.negatives + 1);
    let mut sentence: Vec<u32> = Vec::new();
    for _ in 0..params.epochs {
        for doc in docs {
            sentence.clear();
            match &keep_prob {
                Some(p) => sentence.extend(doc.iter().copied().filter(|&t| rng.random::<f64>() < p[t as usize])),
                None => sentence.extend_from_slice(doc),
            }
            for pos in 0..sentence.len() {
                let lr = (lr0 * (1.0 - processed as f64 / planned)).max(min_lr);
                let center = sentence[pos] as usize;
                let reach = rng.random_range(1..=params.window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(sentence.len() - 1);
                for (ctx_pos, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    targets.clear();
                    targets.push((context, 1.0));
                    for _ in 0..params.negatives {
                        let neg = table.sample(&mut rng);
                        if neg != context {
                            targets.push((neg, 0.0));
                        }
                    }
                    let center_row = &mut input[center * dim..(center + 1) * dim];
                    update_group(center_row, &mut output, dim, &targets, lr, &mut scratch);
                }
                processed += 1;
            }
            // keep the schedule aligned when subsampling drops tokens
            processed += (doc.len() - sentence.len()) as u64;
        }
    }

    debug_assert!(input.iter().all(|x| x.is_finite()));
    if input.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("training diverged; lower the learning rate".into()));
    }
    Ok(EmbeddingMatrix {
        dim,
        terms: vocab.terms().to_vec(),
        fingerprint: vocab.fingerprint(),
        data: input,
        params: params.clone(),
    })
}
