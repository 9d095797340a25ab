use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, LineError, Result};

/// How inverse document frequency is derived from document counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdfFormula {
    /// `ln(N / df)`.
    LnNOverDf,
    /// Weights supplied directly rather than derived from counts.
    Explicit,
}

impl IdfFormula {
    pub fn tag(self) -> &'static str {
        match self {
            IdfFormula::LnNOverDf => "ln_n_over_df",
            IdfFormula::Explicit => "explicit",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "ln_n_over_df" => Some(IdfFormula::LnNOverDf),
            "explicit" => Some(IdfFormula::Explicit),
            _ => None,
        }
    }
}

/// Per-term inverse document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    terms: Vec<String>,
    df: Vec<u64>,
    idf: Vec<f64>,
    n_docs: u64,
    formula: IdfFormula,
    fingerprint: u32,
}

fn classic_idf(n_docs: u64, df: u64) -> f64 {
    (n_docs as f64 / df as f64).ln()
}

/// Fits idf weights: `N` is the number of documents in `docs`, document
/// frequencies come from `vocab`.
pub fn fit_tfidf(docs: &[Vec<u32>], vocab: &Vocabulary) -> Result<TfIdfModel> {
    if docs.is_empty() {
        return Err(Error::Empty("tf-idf documents"));
    }
    let n_docs = docs.len() as u64;
    let df = vocab.document_frequencies().to_vec();
    if let Some(i) = df.iter().position(|&d| d > n_docs) {
        return Err(Error::Config(format!(
            "document frequency of {:?} exceeds the {n_docs} fitted documents",
            vocab.terms()[i]
        )));
    }
    let idf = df.iter().map(|&d| if d == 0 { f64::NAN } else { classic_idf(n_docs, d) }).collect();
    Ok(TfIdfModel {
        terms: vocab.terms().to_vec(),
        df,
        idf,
        n_docs,
        formula: IdfFormula::LnNOverDf,
        fingerprint: vocab.fingerprint(),
    })
}

impl TfIdfModel {
    /// A model with caller-chosen weights over the same terms.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.idf.len() {
            return Err(Error::DimensionMismatch { expected: self.idf.len(), found: weights.len() });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("idf weights must be finite and non-negative".into()));
        }
        Ok(TfIdfModel { idf: weights, formula: IdfFormula::Explicit, ..self.clone() })
    }

    pub fn idf(&self, index: u32) -> Result<f64> {
        match self.idf.get(index as usize) {
            Some(&w) if !w.is_nan() => Ok(w),
            _ => Err(Error::UnknownTerm(index as usize)),
        }
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn formula(&self) -> IdfFormula {
        self.formula
    }

    pub fn vocab_fingerprint(&self) -> u32 {
        self.fingerprint
    }

    /// Header `# formula=<tag>\tn_docs=<N>\tvocab=<crc>` followed by
    /// `term \t index \t df \t idf` rows. Classic weights are recomputed from
    /// `df` on load, so the idf column is informational for that formula.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# formula={}\tn_docs={}\tvocab={:08x}", self.formula.tag(), self.n_docs, self.fingerprint)?;
        for (i, t) in self.terms.iter().enumerate() {
            // {:?} on f64 prints the shortest representation that round-trips
            writeln!(out, "{t}\t{i}\t{}\t{:?}", self.df[i], self.idf[i])?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.ok_or(Error::Empty("tf-idf file"))?;
        let bad_header = || Error::Format { offset: 0, message: format!("bad tf-idf header {header:?}") };
        let fields: Vec<&str> = header.strip_prefix("# ").ok_or_else(bad_header)?.split('\t').collect();
        let get = |key: &str| {
            fields.iter().find_map(|f| f.strip_prefix(key).and_then(|v| v.strip_prefix('='))).ok_or_else(bad_header)
        };
        let formula = IdfFormula::from_tag(get("formula")?).ok_or_else(bad_header)?;
        let n_docs: u64 = get("n_docs")?.parse().map_err(|_| bad_header())?;
        let fingerprint = u32::from_str_radix(get("vocab")?, 16).map_err(|_| bad_header())?;

        let (mut terms, mut df, mut idf) = (Vec::new(), Vec::new(), Vec::new());
        let mut errors = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let row = match f.as_slice() {
                [t, idx, d, w] => match (idx.parse::<usize>(), d.parse::<u64>(), w.parse::<f64>()) {
                    (Ok(idx), Ok(d), Ok(w)) if idx == terms.len() => Ok((t.to_string(), d, w)),
                    _ => Err("bad field or index out of sequence"),
                },
                _ => Err("expected 4 fields"),
            };
            match row {
                Ok((t, d, w)) => {
                    let w = match formula {
                        IdfFormula::LnNOverDf if d == 0 => f64::NAN,
                        IdfFormula::LnNOverDf => classic_idf(n_docs, d),
                        IdfFormula::Explicit => w,
                    };
                    terms.push(t);
                    df.push(d);
                    idf.push(w);
                }
                Err(m) => errors.push(LineError { line: i + 2, message: m.into() }),
            }
        }
        if !errors.is_empty() {
            return Err(Error::Malformed(errors));
        }
        Ok(TfIdfModel { terms, df, idf, n_docs, formula, fingerprint })
    }
}
