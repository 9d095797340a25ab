//! Cosine similarity, the thresholded patent-to-patent graph and free-text
//! search.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ann::{Neighbor, NeighborList, RpForest};
use crate::embedding::{DocumentVector, Signer, VectorStore};
use crate::error::{Error, LineError, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.65;
pub const DEFAULT_K: usize = 100;

/// `x·y / (‖x‖‖y‖)` accumulated in f64 and clamped to `[-1, 1]`.
///
/// Products of two f32 values are exact in f64, so the result does not depend
/// on argument order.
pub fn cosine_slices(x: &[f32], y: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut nx = 0.0f64;
    let mut ny = 0.0f64;
    for (&a, &b) in x.iter().zip(y) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        nx += a * a;
        ny += b * b;
    }
    debug_assert!(nx > 0.0 && ny > 0.0, "cosine of a zero vector");
    (dot / (nx.sqrt() * ny.sqrt())).clamp(-1.0, 1.0)
}

/// Cosine similarity of two signatures. Fails on a zero sentinel.
pub fn cosine(x: &DocumentVector, y: &DocumentVector) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: y.dim() });
    }
    if x.is_sentinel() || y.is_sentinel() {
        return Err(Error::ZeroSignature);
    }
    Ok(cosine_slices(&x.values, &y.values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityEdge {
    pub src: String,
    pub dst: String,
    pub score: f64,
}

/// Per-patent retained neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    pub id: String,
    /// Descending score; every score is at least the graph threshold.
    pub neighbors: Vec<Neighbor>,
}

impl Adjacency {
    /// Number of retained neighbors, the denominator of the indicators.
    pub fn m(&self) -> usize {
        self.neighbors.len()
    }
}

/// Directed adjacency lists: `i → j` holds when `j` was among the top-`k`
/// neighbors of `i` and cleared the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    pub k: usize,
    pub threshold: f64,
    pub nodes: Vec<Adjacency>,
}

/// Sidecar metadata written next to an edge file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub k: usize,
    pub threshold: f64,
    pub search_breadth: Option<usize>,
    /// CRC32 of the index the graph was built from, as 8 hex digits.
    pub index_checksum: String,
    pub sources: usize,
    pub edges: usize,
}

fn check_graph_params(k: usize, threshold: f64) -> Result<()> {
    if k < 1 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if !(threshold > -1.0 && threshold <= 1.0) {
        return Err(Error::Config(format!("threshold {threshold} outside (-1, 1]")));
    }
    Ok(())
}

/// Queries the top-`k` neighbors of every non-sentinel patent in `store`
/// (itself excluded) and keeps those scoring at least `threshold`.
pub fn build_similarity_graph(
    forest: &RpForest,
    store: &VectorStore,
    k: usize,
    threshold: f64,
    search_breadth: Option<usize>,
) -> Result<SimilarityGraph> {
    check_graph_params(k, threshold)?;
    if store.dim() != forest.dim() {
        return Err(Error::DimensionMismatch { expected: forest.dim(), found: store.dim() });
    }
    let sources: Vec<usize> = (0..store.len()).filter(|&i| !store.is_sentinel(i)).collect();
    let nodes = sources
        .par_iter()
        .map(|&i| {
            let id = store.id(i);
            let item_err = |e: Error| Error::Item { id: id.to_string(), source: Box::new(e) };
            let pos = forest.position(id).ok_or_else(|| item_err(Error::UnknownId(id.to_string())))?;
            if forest.vector(pos) != store.vector(i) {
                return Err(item_err(Error::Config("index vector differs from store".into())));
            }
            let mut list = forest.query_id(id, k, search_breadth).map_err(item_err)?;
            list.neighbors.retain(|n| n.score >= threshold);
            Ok(Adjacency { id: id.to_string(), neighbors: list.neighbors })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimilarityGraph { k, threshold, nodes })
}

impl SimilarityGraph {
    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(Adjacency::m).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = SimilarityEdge> + '_ {
        self.nodes.iter().flat_map(|n| {
            n.neighbors.iter().map(move |nb| SimilarityEdge { src: n.id.clone(), dst: nb.id.clone(), score: nb.score })
        })
    }

    /// Neighbor counts keyed by source id.
    pub fn m_by_id(&self) -> HashMap<&str, usize> {
        self.nodes.iter().map(|n| (n.id.as_str(), n.m())).collect()
    }

    /// `src \t dst \t score` with six decimals, sources in graph order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for e in self.edges() {
            writeln!(out, "{}\t{}\t{:.6}", e.src, e.dst, e.score)?;
        }
        Ok(())
    }

    /// Groups edges by source in first-appearance order. Sources without any
    /// edge do not appear in an edge file and get no entry here.
    pub fn from_edges(edges: Vec<SimilarityEdge>, k: usize, threshold: f64) -> Result<Self> {
        let mut nodes: Vec<Adjacency> = Vec::new();
        let mut slot: HashMap<String, usize> = HashMap::new();
        for e in edges {
            if e.src == e.dst {
                return Err(Error::InvalidSample(format!("self edge on {:?}", e.src)));
            }
            let i = *slot.entry(e.src.clone()).or_insert_with(|| {
                nodes.push(Adjacency { id: e.src.clone(), neighbors: Vec::new() });
                nodes.len() - 1
            });
            nodes[i].neighbors.push(Neighbor { id: e.dst, score: e.score });
        }
        for n in &mut nodes {
            n.neighbors.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
        }
        Ok(SimilarityGraph { k, threshold, nodes })
    }

    pub fn meta(&self, index_checksum: u32, search_breadth: Option<usize>) -> GraphMeta {
        GraphMeta {
            k: self.k,
            threshold: self.threshold,
            search_breadth,
            index_checksum: format!("{index_checksum:08x}"),
            sources: self.nodes.len(),
            edges: self.edge_count(),
        }
    }
}

pub fn read_edges<R: BufRead>(reader: R) -> Result<Vec<SimilarityEdge>> {
    let mut edges = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        match f.as_slice() {
            [src, dst, score] => match score.parse::<f64>() {
                Ok(s) if (-1.0..=1.0).contains(&s) => {
                    edges.push(SimilarityEdge { src: src.to_string(), dst: dst.to_string(), score: s })
                }
                _ => errors.push(LineError { line: i + 1, message: format!("bad score {score:?}") }),
            },
            _ => errors.push(LineError { line: i + 1, message: "expected 3 fields".into() }),
        }
    }
    if errors.is_empty() {
        Ok(edges)
    } else {
        Err(Error::Malformed(errors))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Ok,
    NoInVocabularyTerms,
    /// Every in-vocabulary term carries zero weight.
    ZeroSignature,
}

impl SearchStatus {
    pub fn message(self) -> &'static str {
        match self {
            SearchStatus::Ok => "ok",
            SearchStatus::NoInVocabularyTerms => "no in-vocabulary terms",
            SearchStatus::ZeroSignature => "query signature is zero",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub status: SearchStatus,
    pub neighbors: NeighborList,
}

/// Embeds free text with the corpus pipeline and searches the forest.
pub fn semantic_search(text: &str, signer: &Signer<'_>, forest: &RpForest, k: usize) -> Result<SearchResult> {
    let encoded = signer.encode(text);
    let q = crate::embedding::embed_document("<query>", &encoded, signer.embedding, signer.tfidf)?;
    let status = if encoded.is_empty() {
        SearchStatus::NoInVocabularyTerms
    } else if q.is_sentinel() {
        SearchStatus::ZeroSignature
    } else {
        SearchStatus::Ok
    };
    Ok(SearchResult { status, neighbors: forest.query(&q, k, None)? })
}
