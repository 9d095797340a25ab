//! Approximate nearest neighbors under cosine similarity with a forest of
//! random-projection trees, plus the exhaustive baseline.

mod brute;
mod forest;
mod persist;

pub use brute::brute_force_knn;
pub use forest::{ForestParams, Node, RpForest, RpTree};
pub use persist::{INDEX_MAGIC, INDEX_VERSION};

use crate::embedding::DocumentVector;

/// Query side of a [`NeighborList`].
#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Id(String),
    Vector(Vec<f32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub id: String,
    pub score: f64,
}

/// Neighbors in descending score order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub query: Query,
    pub neighbors: Vec<Neighbor>,
    pub k: usize,
    pub search_breadth: usize,
}

impl NeighborList {
    pub(crate) fn empty(q: &DocumentVector, k: usize, search_breadth: usize) -> Self {
        NeighborList { query: Query::Vector(q.values.clone()), neighbors: Vec::new(), k, search_breadth }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.neighbors.iter().map(|n| n.id.as_str())
    }
}

/// Orders scored candidates by descending score, then ascending id, and
/// keeps the first `k`.
pub(crate) fn top_k(mut scored: Vec<(f64, &str)>, k: usize) -> Vec<Neighbor> {
    scored.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.truncate(k);
    scored.into_iter().map(|(score, id)| Neighbor { id: id.to_string(), score }).collect()
}

use crate::embedding::VectorStore;
use crate::error::Result;
use std::path::Path;

/// Builds a forest over the non-sentinel items of `store`.
pub fn build_forest(store: &VectorStore, params: &ForestParams) -> Result<RpForest> {
    RpForest::build(store, params)
}

/// Approximate top-`k` search; see [`RpForest::query`].
pub fn query_knn(
    forest: &RpForest,
    q: &DocumentVector,
    k: usize,
    search_breadth: Option<usize>,
) -> Result<NeighborList> {
    forest.query(q, k, search_breadth)
}

pub fn save_index(forest: &RpForest, path: &Path) -> Result<()> {
    forest.save(path)
}

pub fn load_index(path: &Path) -> Result<RpForest> {
    RpForest::load(path)
}
