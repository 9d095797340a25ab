//! Shared inputs for the benches.

use patsig_core::synth::unit_gaussian_store;
use patsig_core::{DocumentVector, NormFlag, VectorStore};

pub const ITEMS: usize = 20_000;
pub const DIM: usize = 64;

/// The indexed set and a disjoint batch of query vectors.
pub fn workload(queries: usize) -> (VectorStore, Vec<DocumentVector>) {
    let store = unit_gaussian_store(ITEMS, DIM, 11);
    let qs = unit_gaussian_store(queries, DIM, 12);
    let queries = (0..qs.len())
        .map(|i| DocumentVector { id: format!("q{i}"), values: qs.vector(i).to_vec(), norm: NormFlag::Unit })
        .collect();
    (store, queries)
}
