use std::collections::BTreeMap;

use rayon::prelude::*;

use super::sgns::EmbeddingMatrix;
use super::store::{DocumentVector, NormFlag, VectorStore};
use super::tfidf::TfIdfModel;
use crate::corpus::{apply_bigrams, tokenize, BigramTable, PatentRecord, Vocabulary};
use crate::error::{Error, Result};

/// Composes a document signature: the sum over distinct terms of
/// `count · idf · word_vector`, L2-normalized.
///
/// Documents with no in-vocabulary term, or whose weighted sum is zero,
/// yield the zero sentinel instead of an error.
pub fn embed_document(id: &str, doc: &[u32], emb: &EmbeddingMatrix, tfidf: &TfIdfModel) -> Result<DocumentVector> {
    if emb.vocab_fingerprint() != tfidf.vocab_fingerprint() || emb.len() != tfidf.len() {
        return Err(Error::VocabularyMismatch { embedding: emb.vocab_fingerprint(), tfidf: tfidf.vocab_fingerprint() });
    }
    let dim = emb.dim();
    // sorted term order makes the sum independent of token order
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for &t in doc {
        *counts.entry(t).or_default() += 1;
    }
    let mut acc = vec![0.0f64; dim];
    for (&term, &tf) in &counts {
        if term as usize >= emb.len() {
            return Err(Error::UnknownTerm(term as usize));
        }
        let weight = tf as f64 * tfidf.idf(term)?;
        if weight == 0.0 {
            continue;
        }
        for (a, &e) in acc.iter_mut().zip(emb.row(term)) {
            *a += weight * e as f64;
        }
    }
    let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Ok(DocumentVector::zero_sentinel(id, dim));
    }
    Ok(DocumentVector {
        id: id.to_string(),
        values: acc.iter().map(|x| (x / norm) as f32).collect(),
        norm: NormFlag::Unit,
    })
}

/// Everything needed to turn raw text into a signature.
#[derive(Debug, Clone, Copy)]
pub struct Signer<'a> {
    pub bigrams: &'a BigramTable,
    pub vocab: &'a Vocabulary,
    pub embedding: &'a EmbeddingMatrix,
    pub tfidf: &'a TfIdfModel,
}

impl Signer<'_> {
    /// Tokenize, merge bigrams and encode.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        self.vocab.encode(&apply_bigrams(&tokenize(text), self.bigrams))
    }

    pub fn sign(&self, id: &str, text: &str) -> Result<DocumentVector> {
        embed_document(id, &self.encode(text), self.embedding, self.tfidf)
    }
}

/// Signs every record (in parallel) and collects the vectors in input order.
pub fn vectorize_corpus(records: &[PatentRecord], signer: &Signer<'_>) -> Result<VectorStore> {
    let vectors: Vec<DocumentVector> =
        records.par_iter().map(|r| signer.sign(&r.id, &r.abstract_text)).collect::<Result<_>>()?;
    VectorStore::from_vectors(signer.embedding.dim(), vectors)
}
