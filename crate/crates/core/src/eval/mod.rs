//! Validation suites: classifying patents into IPC subclasses from their
//! signatures, and comparing similarity of pairs that do and do not share an
//! attribute.

mod metrics;
mod mlp;
mod pairs;
mod stats;

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use metrics::{evaluate_classifier, placebo_shift, ClassMetrics, EvalMetrics};
pub use mlp::{predict, train_mlp, Layer, LayerGrad, MlpClassifier, MlpConfig};
pub use pairs::{
    relational_report, sample_condition_pairs, write_relational, Condition, PairSample, RelationalRow, ScoredPair,
    SIGNIFICANCE,
};
pub use stats::{welch_t_test, WelchResult};

use crate::corpus::PatentRecord;
use crate::embedding::VectorStore;
use crate::error::{Error, Result};

/// Store rows with a class label taken from each record's first IPC subclass.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRows {
    pub rows: Vec<usize>,
    pub labels: Vec<usize>,
    /// Class names, indexed by label.
    pub classes: Vec<String>,
}

/// Labels every record that has a non-sentinel vector and at least one IPC
/// code. Rows follow corpus order; class indices follow sorted class names.
pub fn subclass_labels(records: &[PatentRecord], store: &VectorStore) -> LabeledRows {
    let mut found = Vec::new();
    for r in records {
        if let (Some(pos), Some(class)) = (store.position(&r.id), r.primary_subclass()) {
            if !store.is_sentinel(pos) {
                found.push((pos, class));
            }
        }
    }
    let names: BTreeMap<String, usize> = found.iter().map(|(_, c)| (c.clone(), 0)).collect();
    let classes: Vec<String> = names.into_keys().collect();
    let lookup: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let labels = found.iter().map(|(_, c)| lookup[c.as_str()]).collect();
    LabeledRows { rows: found.iter().map(|(p, _)| *p).collect(), labels, classes }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOutcome {
    pub metrics: EvalMetrics,
    pub train_size: usize,
    pub test_size: usize,
    pub warnings: Vec<String>,
}

/// Holds out a seeded random `holdout` fraction, trains on the rest and
/// scores the held-out part against its true labels. With `placebo`, the
/// training vectors are paired with the label of the next training
/// observation before fitting.
pub fn classification_experiment(
    vectors: &[&[f32]],
    labels: &[usize],
    classes: usize,
    holdout: f64,
    placebo: bool,
    config: &MlpConfig,
) -> Result<ClassifyOutcome> {
    if !(holdout > 0.0 && holdout < 1.0) {
        return Err(Error::Config(format!("holdout fraction must be in (0, 1), got {holdout}")));
    }
    if vectors.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: vectors.len(), found: labels.len() });
    }
    let n = vectors.len();
    let test_n = ((n as f64 * holdout).round() as usize).clamp(1, n.saturating_sub(2).max(1));
    if n < 3 {
        return Err(Error::InvalidSample(format!("need at least 3 labeled vectors, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(2);
    let mut is_test = vec![false; n];
    for i in sample(&mut rng, n, test_n) {
        is_test[i] = true;
    }
    // both splits keep corpus order
    let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| !is_test[i]);
    let train_x: Vec<&[f32]> = train.iter().map(|&i| vectors[i]).collect();
    let mut train_y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    if placebo {
        train_y = placebo_shift(&train_y)?;
    }
    let mut warnings = Vec::new();
    let mut in_train = vec![false; classes];
    for &y in &train_y {
        in_train[y] = true;
    }
    let mut unseen: Vec<usize> = test.iter().map(|&i| labels[i]).filter(|&y| !in_train[y]).collect();
    unseen.sort_unstable();
    unseen.dedup();
    if !unseen.is_empty() {
        warnings.push(format!("{} held-out classes never appear in training", unseen.len()));
    }
    let model = train_mlp(&train_x, &train_y, classes, config)?;
    let test_x: Vec<&[f32]> = test.iter().map(|&i| vectors[i]).collect();
    let test_y: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
    let predicted = predict(&model, &test_x)?;
    Ok(ClassifyOutcome {
        metrics: evaluate_classifier(&predicted, &test_y, classes)?,
        train_size: train.len(),
        test_size: test.len(),
        warnings,
    })
}
