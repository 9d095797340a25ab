//! Per-class precision, recall and F1 with support-weighted averages.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalMetrics {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    // undefined ratios count as zero
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores `predicted` against `truth`. Averages are weighted by true support.
pub fn evaluate_classifier(predicted: &[usize], truth: &[usize], classes: usize) -> Result<EvalMetrics> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: predicted.len() });
    }
    if truth.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    if let Some(&bad) = predicted.iter().chain(truth).find(|&&c| c >= classes) {
        return Err(Error::Config(format!("class {bad} outside 0..{classes}")));
    }
    let mut tp = vec![0usize; classes];
    let mut pred_count = vec![0usize; classes];
    let mut support = vec![0usize; classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        pred_count[p] += 1;
        support[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    let per_class: Vec<ClassMetrics> = (0..classes)
        .map(|c| {
            let precision = ratio(tp[c], pred_count[c]);
            let recall = ratio(tp[c], support[c]);
            let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            ClassMetrics { precision, recall, f1, support: support[c] }
        })
        .collect();
    let n = truth.len() as f64;
    let weighted = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / n;
    Ok(EvalMetrics {
        accuracy: tp.iter().sum::<usize>() as f64 / n,
        weighted_precision: weighted(|m| m.precision),
        weighted_recall: weighted(|m| m.recall),
        weighted_f1: weighted(|m| m.f1),
        per_class,
    })
}

impl EvalMetrics {
    /// One row per class plus a trailing `weighted` row.
    pub fn write_tsv<W: Write>(&self, labels: &[String], out: &mut W) -> Result<()> {
        writeln!(out, "class\tprecision\trecall\tf1\tsupport")?;
        for (i, m) in self.per_class.iter().enumerate() {
            let label = labels.get(i).map(String::as_str).unwrap_or("?");
            writeln!(out, "{label}\t{:.6}\t{:.6}\t{:.6}\t{}", m.precision, m.recall, m.f1, m.support)?;
        }
        let total: usize = self.per_class.iter().map(|m| m.support).sum();
        writeln!(
            out,
            "weighted\t{:.6}\t{:.6}\t{:.6}\t{total}",
            self.weighted_precision, self.weighted_recall, self.weighted_f1
        )?;
        Ok(())
    }
}

/// Pairs each observation's vector with the label of the next observation,
/// wrapping at the end. Returns the shifted labels.
pub fn placebo_shift(labels: &[usize]) -> Result<Vec<usize>> {
    if labels.len() < 2 {
        return Err(Error::InvalidSample("placebo shift needs at least two observations".into()));
    }
    let mut shifted = labels.to_vec();
    shifted.rotate_left(1);
    Ok(shifted)
}
