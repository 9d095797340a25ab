//! Seeded synthetic data: topic-structured patent corpora and random vector
//! sets. Used by the bundled fixture, the benches and the test suites.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{IpcCode, PatentRecord};
use crate::embedding::{NormFlag, VectorStore};

/// Subclasses with pairwise distinct classes, one per topic.
const SUBCLASSES: [&str; 12] =
    ["A61K", "B60L", "C07D", "G06F", "H01M", "H04L", "F02B", "G01N", "B01J", "E04B", "D06F", "C12N"];
const COUNTRIES: [&str; 8] = ["CN", "DE", "FR", "GB", "JP", "KR", "SE", "US"];
const GENERIC: [&str; 24] = [
    "method",
    "system",
    "device",
    "apparatus",
    "unit",
    "means",
    "comprising",
    "wherein",
    "first",
    "second",
    "least",
    "one",
    "configured",
    "provided",
    "having",
    "which",
    "is",
    "are",
    "for",
    "with",
    "and",
    "of",
    "a",
    "the",
];
const ONSETS: [&str; 14] = ["b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v"];
const NUCLEI: [&str; 5] = ["a", "e", "i", "o", "u"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub records: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    /// Content words per abstract, excluding the fixed opening phrase.
    pub abstract_words: usize,
    /// Probability that a content word comes from the record's own topic.
    pub topic_purity: f64,
    pub first_year: i32,
    pub last_year: i32,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            records: 1000,
            topics: 8,
            words_per_topic: 40,
            abstract_words: 40,
            topic_purity: 0.7,
            first_year: 1976,
            last_year: 2019,
            seed: 7,
        }
    }
}

/// Pronounceable pseudo-words, unique across the whole lexicon.
fn lexicon(rng: &mut ChaCha8Rng, count: usize) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = rng.random_range(2..=3);
        let w: String =
            (0..syllables).map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), NUCLEI.choose(rng).unwrap())).collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn shares(rng: &mut ChaCha8Rng) -> BTreeMap<String, f64> {
    let first = COUNTRIES.choose(rng).unwrap().to_string();
    if rng.random_bool(0.7) {
        return [(first, 1.0)].into();
    }
    let mut second = first.clone();
    while second == first {
        second = COUNTRIES.choose(rng).unwrap().to_string();
    }
    // binary fractions keep the share sum exact
    let split = *[0.5, 0.25, 0.75].choose(rng).unwrap();
    [(first, split), (second, 1.0 - split)].into()
}

/// Records whose abstracts, IPC codes, inventors, assignees and citations
/// all follow a hidden topic. The returned vector pairs each record with
/// its topic.
pub fn synthetic_corpus_with_topics(spec: &CorpusSpec) -> (Vec<PatentRecord>, Vec<usize>) {
    assert!(spec.topics >= 1 && spec.topics <= SUBCLASSES.len(), "1..=12 topics supported");
    assert!(spec.first_year <= spec.last_year);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let words = lexicon(&mut rng, spec.topics * spec.words_per_topic);
    let topic_words: Vec<&[String]> = words.chunks(spec.words_per_topic).collect();
    let inventors: Vec<Vec<String>> =
        (0..spec.topics).map(|t| (0..25).map(|i| format!("Inventor {t}-{i}")).collect()).collect();
    let assignees: Vec<Vec<String>> =
        (0..spec.topics).map(|t| (0..6).map(|i| format!("Assignee {t}-{i} Corp")).collect()).collect();

    let mut records = Vec::with_capacity(spec.records);
    let mut topics = Vec::with_capacity(spec.records);
    let mut by_topic: Vec<Vec<usize>> = vec![Vec::new(); spec.topics];
    for i in 0..spec.records {
        let t = rng.random_range(0..spec.topics);
        let mut text = String::from("The present invention relates to");
        for w in 0..spec.abstract_words {
            let word = if rng.random_bool(spec.topic_purity) {
                topic_words[t].choose(&mut rng).unwrap().as_str()
            } else if rng.random_bool(0.5) {
                GENERIC.choose(&mut rng).unwrap()
            } else {
                topic_words[rng.random_range(0..spec.topics)].choose(&mut rng).unwrap().as_str()
            };
            text.push(' ');
            text.push_str(word);
            if w % 12 == 11 {
                text.push('.');
            }
        }
        text.push('.');

        let code = |topic: usize, rng: &mut ChaCha8Rng| -> IpcCode {
            let sub = SUBCLASSES[topic];
            format!("{sub} {}/{:02}", rng.random_range(1..=4), rng.random_range(0..3) * 2).parse().unwrap()
        };
        let mut ipc_codes = vec![code(t, &mut rng)];
        if rng.random_bool(0.3) {
            ipc_codes.push(code(rng.random_range(0..spec.topics), &mut rng));
        }
        let mut inv: Vec<String> =
            (0..rng.random_range(1..=3)).map(|_| inventors[t].choose(&mut rng).unwrap().clone()).collect();
        inv.sort();
        inv.dedup();
        let earlier = &by_topic[t];
        let mut citations: Vec<String> = if earlier.is_empty() {
            vec![]
        } else {
            (0..rng.random_range(0..=3)).map(|_| format!("SYN{:06}", earlier.choose(&mut rng).unwrap())).collect()
        };
        citations.sort();
        citations.dedup();

        records.push(PatentRecord {
            id: format!("SYN{i:06}"),
            abstract_text: text,
            year: rng.random_range(spec.first_year..=spec.last_year),
            granted: rng.random_bool(0.9),
            is_priority: rng.random_bool(0.9),
            ipc_codes,
            country_shares: shares(&mut rng),
            inventors: inv,
            assignees: vec![assignees[t].choose(&mut rng).unwrap().clone()],
            citations,
        });
        topics.push(t);
        by_topic[t].push(i);
    }
    (records, topics)
}

pub fn synthetic_corpus(spec: &CorpusSpec) -> Vec<PatentRecord> {
    synthetic_corpus_with_topics(spec).0
}

fn unit(mut v: Vec<f32>) -> Vec<f32> {
    let norm = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x = (*x as f64 / norm) as f32);
    }
    v
}

/// `n` isotropic Gaussian directions on the unit sphere, ids `v0..`.
pub fn unit_gaussian_store(n: usize, dim: usize, seed: u64) -> VectorStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = VectorStore::new(dim);
    for i in 0..n {
        let v = unit((0..dim).map(|_| StandardNormal.sample(&mut rng)).collect());
        store.push_slice(format!("v{i}"), NormFlag::Unit, &v).expect("fresh ids and finite values");
    }
    store
}

/// Unit vectors around `classes` random centers, with Gaussian noise of
/// standard deviation `spread` per coordinate. Labels cycle through the
/// classes in order, so consecutive observations never share a class.
pub fn labeled_blobs(n: usize, classes: usize, dim: usize, spread: f64, seed: u64) -> (Vec<Vec<f32>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f32>> =
        (0..classes).map(|_| unit((0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())).collect();
    (0..n)
        .map(|i| {
            let c = i % classes;
            let v = centers[c]
                .iter()
                .map(|&x| x + (spread * Distribution::<f64>::sample(&StandardNormal, &mut rng)) as f32)
                .collect();
            (unit(v), c)
        })
        .unzip()
}
