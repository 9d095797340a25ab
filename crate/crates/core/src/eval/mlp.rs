//! Fully connected classifier: ReLU hidden layers, softmax output,
//! cross-entropy loss, mini-batch SGD with momentum.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![512, 256, 128],
            epochs: 10,
            batch_size: 64,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 1,
        }
    }
}

/// Dense layer with row-major `outputs × inputs` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn forward(&self, x: &[f64], batch: usize, out: &mut Vec<f64>) {
        out.clear();
        out.reserve(batch * self.outputs);
        for row in x.chunks_exact(self.inputs).take(batch) {
            for (w, b) in self.weights.chunks_exact(self.inputs).zip(&self.bias) {
                out.push(b + w.iter().zip(row).map(|(a, c)| a * c).sum::<f64>());
            }
        }
    }
}

/// Gradients for one layer, same shapes as the layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    pub layers: Vec<Layer>,
    pub config: MlpConfig,
}

fn softmax_rows(z: &mut [f64], classes: usize) {
    for row in z.chunks_exact_mut(classes) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

impl MlpClassifier {
    /// He-initialized network; biases start at zero.
    pub fn new(input: usize, classes: usize, config: &MlpConfig) -> Result<Self> {
        if input == 0 || classes < 2 {
            return Err(Error::Config("classifier needs input dim >= 1 and >= 2 classes".into()));
        }
        if config.hidden.contains(&0) {
            return Err(Error::Config("hidden layer of width 0".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut dims = vec![input];
        dims.extend(&config.hidden);
        dims.push(classes);
        let layers = dims
            .windows(2)
            .map(|w| {
                let normal = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).expect("positive std");
                Layer {
                    inputs: w[0],
                    outputs: w[1],
                    weights: (0..w[0] * w[1]).map(|_| normal.sample(&mut rng)).collect(),
                    bias: vec![0.0; w[1]],
                }
            })
            .collect();
        Ok(MlpClassifier { layers, config: config.clone() })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn classes(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs
    }

    /// Pre-activations of every layer for a flat row-major batch.
    fn forward_all(&self, x: &[f64], batch: usize) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.forward(&act, batch, &mut z);
            if l + 1 < self.layers.len() {
                act = z.iter().map(|v| v.max(0.0)).collect();
            }
            pre.push(z);
        }
        pre
    }

    /// Class probabilities, one row per input row.
    pub fn predict_proba(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let mut out = self.forward_all(x, batch).pop().expect("at least one layer");
        softmax_rows(&mut out, self.classes());
        out
    }

    pub fn predict(&self, x: &[f64], batch: usize) -> Vec<usize> {
        self.predict_proba(x, batch)
            .chunks_exact(self.classes())
            .map(|p| {
                p.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                    .0
            })
            .collect()
    }

    /// Mean cross-entropy of a batch and its gradient with respect to every
    /// layer's weights and biases.
    pub fn loss_and_gradients(&self, x: &[f64], labels: &[usize]) -> (f64, Vec<LayerGrad>) {
        let batch = labels.len();
        let classes = self.classes();
        let pre = self.forward_all(x, batch);
        let mut delta = pre.last().expect("layers").clone();
        softmax_rows(&mut delta, classes);
        let mut loss = 0.0;
        for (row, &y) in delta.chunks_exact_mut(classes).zip(labels) {
            loss -= row[y].max(f64::MIN_POSITIVE).ln();
            row[y] -= 1.0;
        }
        let scale = 1.0 / batch as f64;
        delta.iter_mut().for_each(|d| *d *= scale);

        let mut grads = vec![LayerGrad { weights: vec![], bias: vec![] }; self.layers.len()];
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input: Vec<f64> = if l == 0 { x.to_vec() } else { pre[l - 1].iter().map(|v| v.max(0.0)).collect() };
            let mut gw = vec![0.0; layer.weights.len()];
            let mut gb = vec![0.0; layer.outputs];
            for (drow, xrow) in delta.chunks_exact(layer.outputs).zip(input.chunks_exact(layer.inputs)) {
                for (o, &d) in drow.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    for (g, &xi) in gw[o * layer.inputs..(o + 1) * layer.inputs].iter_mut().zip(xrow) {
                        *g += d * xi;
                    }
                }
            }
            if l > 0 {
                let mut next = vec![0.0; batch * layer.inputs];
                for (nrow, drow) in next.chunks_exact_mut(layer.inputs).zip(delta.chunks_exact(layer.outputs)) {
                    for (o, &d) in drow.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        for (n, &w) in nrow.iter_mut().zip(&layer.weights[o * layer.inputs..(o + 1) * layer.inputs]) {
                            *n += d * w;
                        }
                    }
                }
                // ReLU derivative of the previous layer
                for (n, &z) in next.iter_mut().zip(&pre[l - 1]) {
                    if z <= 0.0 {
                        *n = 0.0;
                    }
                }
                delta = next;
            }
            grads[l] = LayerGrad { weights: gw, bias: gb };
        }
        (loss * scale, grads)
    }
}

fn flatten(vectors: &[&[f32]], dim: usize) -> Result<Vec<f64>> {
    let mut x = Vec::with_capacity(vectors.len() * dim);
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        x.extend(v.iter().map(|&f| f as f64));
    }
    Ok(x)
}

/// Trains a classifier on `vectors` with class indices `labels` in
/// `0..classes`. Training is sequential and seeded.
pub fn train_mlp(vectors: &[&[f32]], labels: &[usize], classes: usize, config: &MlpConfig) -> Result<MlpClassifier> {
    if vectors.is_empty() {
        return Err(Error::Empty("training vectors"));
    }
    if vectors.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: vectors.len(), found: labels.len() });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Config(format!("label {bad} outside 0..{classes}")));
    }
    if config.batch_size == 0
        || config.learning_rate.is_nan()
        || config.learning_rate <= 0.0
        || !(0.0..1.0).contains(&config.momentum)
    {
        return Err(Error::Config("batch_size >= 1, learning_rate > 0 and momentum in [0, 1) required".into()));
    }
    let dim = vectors[0].len();
    let x = flatten(vectors, dim)?;
    let mut model = MlpClassifier::new(dim, classes, config)?;
    let mut velocity: Vec<LayerGrad> = model
        .layers
        .iter()
        .map(|l| LayerGrad { weights: vec![0.0; l.weights.len()], bias: vec![0.0; l.bias.len()] })
        .collect();
    // separate stream so shuffling does not shift the initialization draws
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let mut xb = Vec::with_capacity(config.batch_size * dim);
    let mut yb = Vec::with_capacity(config.batch_size);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            xb.clear();
            yb.clear();
            for &i in chunk {
                xb.extend_from_slice(&x[i * dim..(i + 1) * dim]);
                yb.push(labels[i]);
            }
            let (_, grads) = model.loss_and_gradients(&xb, &yb);
            for ((layer, g), v) in model.layers.iter_mut().zip(&grads).zip(&mut velocity) {
                for ((w, gw), vw) in layer.weights.iter_mut().zip(&g.weights).zip(&mut v.weights) {
                    *vw = config.momentum * *vw - config.learning_rate * gw;
                    *w += *vw;
                }
                for ((b, gb), vb) in layer.bias.iter_mut().zip(&g.bias).zip(&mut v.bias) {
                    *vb = config.momentum * *vb - config.learning_rate * gb;
                    *b += *vb;
                }
            }
        }
        if model.layers.iter().any(|l| l.weights.iter().chain(&l.bias).any(|w| !w.is_finite())) {
            return Err(Error::Config("classifier training diverged; lower the learning rate".into()));
        }
    }
    Ok(model)
}

/// Predicted class per vector.
pub fn predict(model: &MlpClassifier, vectors: &[&[f32]]) -> Result<Vec<usize>> {
    let x = flatten(vectors, model.input_dim())?;
    Ok(model.predict(&x, vectors.len()))
}
