use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, LineError, Result};

/// Lowercases `text`, splits it on every non-alphanumeric character and drops
/// tokens shorter than two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    // lowercase first: some uppercase letters lowercase to non-alphanumeric
    // combining marks, and splitting afterwards keeps re-tokenization stable
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_string)
        .collect()
}

/// Adjacent token pairs promoted to single tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigramTable {
    pairs: BTreeMap<(String, String), u64>,
    threshold: u64,
}

impl BigramTable {
    pub fn empty(threshold: u64) -> Self {
        BigramTable { pairs: BTreeMap::new(), threshold }
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        // BTreeMap<(String, String)> cannot be probed with borrowed strs
        self.pairs.contains_key(&(a.to_string(), b.to_string()))
    }

    pub fn count(&self, a: &str, b: &str) -> Option<u64> {
        self.pairs.get(&(a.to_string(), b.to_string())).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.pairs.iter().map(|((a, b), &c)| (a.as_str(), b.as_str(), c))
    }

    pub fn joined(a: &str, b: &str) -> String {
        format!("{a}_{b}")
    }

    /// Writes `token_a \t token_b \t count` rows in lexicographic pair order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for ((a, b), c) in &self.pairs {
            writeln!(out, "{a}\t{b}\t{c}")?;
        }
        Ok(())
    }

    /// Reads the TSV written by [`BigramTable::write_tsv`]. The threshold is
    /// not stored in the file and must be supplied.
    pub fn read_tsv<R: BufRead>(reader: R, threshold: u64) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        let mut errors = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                [a, b, c] => match c.parse::<u64>() {
                    Ok(c) => {
                        pairs.insert((a.to_string(), b.to_string()), c);
                    }
                    Err(e) => errors.push(LineError { line: i + 1, message: e.to_string() }),
                },
                _ => errors.push(LineError { line: i + 1, message: "expected 3 fields".into() }),
            }
        }
        if !errors.is_empty() {
            return Err(Error::Malformed(errors));
        }
        Ok(BigramTable { pairs, threshold })
    }
}

/// Counts adjacent ordered pairs and keeps those seen at least `threshold`
/// times. Counting is partitioned across threads; merged counts do not depend
/// on the partitioning.
pub fn detect_bigrams(docs: &[Vec<String>], threshold: u64) -> BigramTable {
    let threshold = threshold.max(1);
    let counts = docs
        .par_iter()
        .fold(HashMap::<(&str, &str), u64>::new, |mut acc, doc| {
            for w in doc.windows(2) {
                *acc.entry((w[0].as_str(), w[1].as_str())).or_default() += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });
    let pairs = counts
        .into_iter()
        .filter(|&(_, c)| c >= threshold)
        .map(|((a, b), c)| ((a.to_string(), b.to_string()), c))
        .collect();
    BigramTable { pairs, threshold }
}

/// Single greedy left-to-right pass: a matched pair becomes `a_b`, and both of
/// its tokens are consumed.
pub fn apply_bigrams(doc: &[String], table: &BigramTable) -> Vec<String> {
    if table.is_empty() {
        return doc.to_vec();
    }
    let mut out = Vec::with_capacity(doc.len());
    let mut i = 0;
    while i < doc.len() {
        if i + 1 < doc.len() && table.contains(&doc[i], &doc[i + 1]) {
            out.push(BigramTable::joined(&doc[i], &doc[i + 1]));
            i += 2;
        } else {
            out.push(doc[i].clone());
            i += 1;
        }
    }
    out
}
