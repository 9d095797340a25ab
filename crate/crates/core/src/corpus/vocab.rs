use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, LineError, Result};

/// Term table with corpus and document frequencies.
///
/// Indices follow descending corpus frequency with lexicographic tie-breaks,
/// so a vocabulary built from the same documents is always identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    freq: Vec<u64>,
    df: Vec<u64>,
}

impl Vocabulary {
    fn from_rows(rows: Vec<(String, u64, u64)>) -> Self {
        let index = rows.iter().enumerate().map(|(i, (t, _, _))| (t.clone(), i as u32)).collect();
        let mut terms = Vec::with_capacity(rows.len());
        let mut freq = Vec::with_capacity(rows.len());
        let mut df = Vec::with_capacity(rows.len());
        for (t, f, d) in rows {
            terms.push(t);
            freq.push(f);
            df.push(d);
        }
        Vocabulary { terms, index, freq, df }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: u32) -> Option<&str> {
        self.terms.get(index as usize).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn corpus_frequency(&self, index: u32) -> u64 {
        self.freq[index as usize]
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.freq
    }

    pub fn document_frequency(&self, index: u32) -> u64 {
        self.df[index as usize]
    }

    pub fn document_frequencies(&self) -> &[u64] {
        &self.df
    }

    /// Maps tokens to indices, dropping out-of-vocabulary tokens.
    pub fn encode(&self, doc: &[String]) -> Vec<u32> {
        doc.iter().filter_map(|t| self.index_of(t)).collect()
    }

    /// CRC32 over the ordered term list. Models trained against different
    /// vocabularies carry different fingerprints.
    pub fn fingerprint(&self) -> u32 {
        let mut h = crc32fast::Hasher::new();
        for t in &self.terms {
            h.update(t.as_bytes());
            h.update(&[0]);
        }
        h.finalize()
    }

    /// Writes `term \t index \t corpus_freq \t doc_freq` in index order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, t) in self.terms.iter().enumerate() {
            writeln!(out, "{t}\t{i}\t{}\t{}", self.freq[i], self.df[i])?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows = Vec::new();
        let mut errors = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let line_no = i + 1;
            let fields: Vec<&str> = line.split('\t').collect();
            let parsed = match fields.as_slice() {
                [t, idx, f, d] => match (idx.parse::<usize>(), f.parse::<u64>(), d.parse::<u64>()) {
                    (Ok(idx), Ok(f), Ok(d)) if idx == rows.len() && d <= f && d >= 1 => Ok((t.to_string(), f, d)),
                    (Ok(idx), Ok(_), Ok(_)) if idx != rows.len() => {
                        Err(format!("index {idx} out of sequence (expected {})", rows.len()))
                    }
                    _ => Err("bad numeric field or doc_freq outside [1, corpus_freq]".to_string()),
                },
                _ => Err("expected 4 fields".to_string()),
            };
            match parsed {
                Ok(row) => rows.push(row),
                Err(message) => errors.push(LineError { line: line_no, message }),
            }
        }
        if !errors.is_empty() {
            return Err(Error::Malformed(errors));
        }
        let distinct: HashSet<&str> = rows.iter().map(|r| r.0.as_str()).collect();
        if distinct.len() != rows.len() {
            return Err(Error::Format { offset: 0, message: "duplicate term in vocabulary".into() });
        }
        if rows.is_empty() {
            return Err(Error::Empty("vocabulary file"));
        }
        Ok(Vocabulary::from_rows(rows))
    }
}

/// Builds the vocabulary of terms occurring at least `min_count` times.
pub fn build_vocabulary(docs: &[Vec<String>], min_count: u64) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    let counts = docs
        .par_iter()
        .fold(HashMap::<&str, (u64, u64)>::new, |mut acc, doc| {
            let mut seen = HashSet::new();
            for t in doc {
                let e = acc.entry(t.as_str()).or_default();
                e.0 += 1;
                if seen.insert(t.as_str()) {
                    e.1 += 1;
                }
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, (f, d)) in b {
                let e = a.entry(k).or_default();
                e.0 += f;
                e.1 += d;
            }
            a
        });
    let mut rows: Vec<(String, u64, u64)> =
        counts.into_iter().filter(|&(_, (f, _))| f >= min_count).map(|(t, (f, d))| (t.to_string(), f, d)).collect();
    if rows.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Vocabulary::from_rows(rows))
}
