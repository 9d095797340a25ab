use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{top_k, NeighborList, Query};
use crate::embedding::{DocumentVector, VectorStore};
use crate::error::{Error, Result};
use crate::similarity::cosine_slices;

/// Failed hyperplane attempts tolerated before a random balanced split.
const SPLIT_RETRIES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub leaf_capacity: usize,
    pub seed: u64,
    /// Expected vector dimension; checked against the store when set.
    pub dim: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, leaf_capacity: 16, seed: 1, dim: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Points with `normal · x - offset > 0` go left. A zero normal marks a
    /// random balanced split, which queries explore on both sides equally.
    Split {
        normal: Vec<f32>,
        offset: f32,
        left: u32,
        right: u32,
    },
    Leaf(Vec<u32>),
}

/// One random-projection tree; `nodes[0]` is the root and children always
/// come after their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct RpTree {
    pub(crate) nodes: Vec<Node>,
}

impl RpTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Item indices of every leaf, in node order.
    pub fn leaves(&self) -> impl Iterator<Item = &[u32]> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf(items) => Some(items.as_slice()),
            Node::Split { .. } => None,
        })
    }

    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut max = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            max = max.max(depth[i]);
            if let Node::Split { left, right, .. } = n {
                depth[*left as usize] = depth[i] + 1;
                depth[*right as usize] = depth[i] + 1;
            }
        }
        max + 1
    }
}

#[inline]
pub(crate) fn margin(normal: &[f32], offset: f32, x: &[f32]) -> f32 {
    normal.iter().zip(x).map(|(a, b)| a * b).sum::<f32>() - offset
}

/// Searchable forest over the non-sentinel items of a vector store.
#[derive(Debug, Clone, PartialEq)]
pub struct RpForest {
    pub(crate) dim: usize,
    pub(crate) params: ForestParams,
    pub(crate) ids: Vec<String>,
    pub(crate) positions: HashMap<String, u32>,
    pub(crate) data: Vec<f32>,
    pub(crate) trees: Vec<RpTree>,
}

/// Hyperplane normal, offset, and the items on each side.
type Split = (Vec<f32>, f32, Vec<u32>, Vec<u32>);

struct TreeBuilder<'a> {
    data: &'a [f32],
    dim: usize,
    leaf_capacity: usize,
    rng: ChaCha8Rng,
}

impl TreeBuilder<'_> {
    fn vector(&self, i: u32) -> &[f32] {
        &self.data[i as usize * self.dim..(i as usize + 1) * self.dim]
    }

    /// Perpendicular bisector of two sampled items, or `None` if the attempt
    /// does not separate the set.
    fn try_split(&mut self, items: &[u32]) -> Option<Split> {
        let i = self.rng.random_range(0..items.len());
        let mut j = self.rng.random_range(0..items.len() - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (self.vector(items[i]), self.vector(items[j]));
        let diff: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| x as f64 - y as f64).collect();
        let len = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
        if len == 0.0 {
            return None;
        }
        let normal: Vec<f32> = diff.iter().map(|d| (d / len) as f32).collect();
        let offset = normal
            .iter()
            .zip(a.iter().zip(b))
            .map(|(&n, (&x, &y))| n as f64 * (x as f64 + y as f64) * 0.5)
            .sum::<f64>() as f32;
        let (left, right): (Vec<u32>, Vec<u32>) =
            items.iter().partition(|&&it| margin(&normal, offset, self.vector(it)) > 0.0);
        if left.is_empty() || right.is_empty() {
            return None;
        }
        Some((normal, offset, left, right))
    }

    fn balanced_split(&mut self, items: &[u32]) -> (Vec<f32>, f32, Vec<u32>, Vec<u32>) {
        let mut shuffled = items.to_vec();
        shuffled.shuffle(&mut self.rng);
        let right = shuffled.split_off(shuffled.len() / 2);
        (vec![0.0; self.dim], 0.0, shuffled, right)
    }

    fn build(mut self, items: Vec<u32>) -> RpTree {
        let mut nodes = vec![Node::Leaf(Vec::new())];
        let mut pending = vec![(0usize, items)];
        while let Some((slot, items)) = pending.pop() {
            if items.len() <= self.leaf_capacity {
                nodes[slot] = Node::Leaf(items);
                continue;
            }
            let split = (0..=SPLIT_RETRIES).find_map(|_| self.try_split(&items));
            let (normal, offset, left_items, right_items) = split.unwrap_or_else(|| self.balanced_split(&items));
            let left = nodes.len();
            nodes.push(Node::Leaf(Vec::new()));
            let right = nodes.len();
            nodes.push(Node::Leaf(Vec::new()));
            nodes[slot] = Node::Split { normal, offset, left: left as u32, right: right as u32 };
            // right first so the left subtree is expanded first
            pending.push((right, right_items));
            pending.push((left, left_items));
        }
        RpTree { nodes }
    }
}

#[derive(PartialEq)]
struct Frontier {
    priority: f32,
    tree: u32,
    node: u32,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.tree.cmp(&self.tree))
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl RpForest {
    /// Builds the forest. Trees are independent: tree `t` draws from its own
    /// ChaCha stream `t` of the master seed, so parallel and sequential
    /// construction give the same forest.
    pub fn build(store: &VectorStore, params: &ForestParams) -> Result<Self> {
        if let Some(d) = params.dim {
            if d != store.dim() {
                return Err(Error::DimensionMismatch { expected: d, found: store.dim() });
            }
        }
        if params.n_trees < 1 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if params.leaf_capacity < 1 {
            return Err(Error::Config("leaf_capacity must be at least 1".into()));
        }
        let dim = store.dim();
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for i in 0..store.len() {
            if !store.is_sentinel(i) {
                ids.push(store.id(i).to_string());
                data.extend_from_slice(store.vector(i));
            }
        }
        if ids.is_empty() {
            return Err(Error::Empty("index items (all vectors are zero sentinels)"));
        }
        if ids.len() > u32::MAX as usize {
            return Err(Error::Config("too many items for u32 indices".into()));
        }
        let mut forest = RpForest {
            dim,
            params: ForestParams { dim: Some(dim), ..params.clone() },
            positions: ids.iter().enumerate().map(|(i, id)| (id.clone(), i as u32)).collect(),
            ids,
            data,
            trees: Vec::new(),
        };
        forest.trees = (0..params.n_trees).into_par_iter().map(|t| forest.build_tree(t)).collect();
        Ok(forest)
    }

    pub(crate) fn build_tree(&self, t: usize) -> RpTree {
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        rng.set_stream(t as u64);
        let builder = TreeBuilder { data: &self.data, dim: self.dim, leaf_capacity: self.params.leaf_capacity, rng };
        builder.build((0..self.ids.len() as u32).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn trees(&self) -> &[RpTree] {
        &self.trees
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).map(|&p| p as usize)
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn default_breadth(&self, k: usize) -> usize {
        self.params.n_trees.saturating_mul(k)
    }

    /// Distinct candidate items for `q`: nodes are expanded best-first by
    /// margin across all trees until `breadth` distinct items have been
    /// gathered or every tree is exhausted.
    pub fn candidates(&self, q: &[f32], breadth: usize) -> Vec<u32> {
        let mut heap = BinaryHeap::with_capacity(self.trees.len() * 4);
        for t in 0..self.trees.len() {
            heap.push(Frontier { priority: f32::INFINITY, tree: t as u32, node: 0 });
        }
        let mut seen = vec![0u64; self.ids.len().div_ceil(64)];
        let mut found: Vec<u32> = Vec::with_capacity(breadth.min(self.ids.len()) + self.params.leaf_capacity);
        while found.len() < breadth {
            let Some(Frontier { priority, tree, node }) = heap.pop() else { break };
            match &self.trees[tree as usize].nodes[node as usize] {
                Node::Leaf(items) => {
                    for &it in items {
                        let (word, bit) = (it as usize / 64, 1u64 << (it % 64));
                        if seen[word] & bit == 0 {
                            seen[word] |= bit;
                            found.push(it);
                        }
                    }
                }
                Node::Split { normal, offset, left, right } => {
                    let m = margin(normal, *offset, q);
                    heap.push(Frontier { priority: priority.min(m), tree, node: *left });
                    heap.push(Frontier { priority: priority.min(-m), tree, node: *right });
                }
            }
        }
        found
    }

    fn search(&self, q: &[f32], k: usize, breadth: usize, exclude: Option<usize>) -> Vec<super::Neighbor> {
        let scored: Vec<(f64, &str)> = self
            .candidates(q, breadth)
            .into_iter()
            .map(|c| c as usize)
            .filter(|&c| Some(c) != exclude)
            .map(|c| (cosine_slices(q, self.vector(c)), self.ids[c].as_str()))
            .collect();
        top_k(scored, k)
    }

    fn check_query(&self, k: usize, dim: usize) -> Result<()> {
        if k < 1 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: dim });
        }
        Ok(())
    }

    /// Approximate top-`k` neighbors of `q`. Every returned score is the
    /// exact cosine of the pair. `search_breadth` defaults to `n_trees * k`.
    pub fn query(&self, q: &DocumentVector, k: usize, search_breadth: Option<usize>) -> Result<NeighborList> {
        self.check_query(k, q.dim())?;
        let breadth = search_breadth.unwrap_or_else(|| self.default_breadth(k));
        if q.is_sentinel() {
            return Ok(NeighborList::empty(q, k, breadth));
        }
        Ok(NeighborList {
            query: Query::Vector(q.values.clone()),
            neighbors: self.search(&q.values, k, breadth, None),
            k,
            search_breadth: breadth,
        })
    }

    /// Like [`RpForest::query`] for an indexed item, excluding the item itself.
    pub fn query_id(&self, id: &str, k: usize, search_breadth: Option<usize>) -> Result<NeighborList> {
        self.check_query(k, self.dim)?;
        let pos = self.position(id).ok_or_else(|| Error::UnknownId(id.to_string()))?;
        // one extra slot of breadth to make room for the item itself
        let breadth = search_breadth.unwrap_or_else(|| self.default_breadth(k)).saturating_add(1);
        Ok(NeighborList {
            query: Query::Id(id.to_string()),
            neighbors: self.search(self.vector(pos), k, breadth, Some(pos)),
            k,
            search_breadth: breadth,
        })
    }
}
