use super::{top_k, NeighborList, Query};
use crate::embedding::{DocumentVector, VectorStore};
use crate::error::{Error, Result};
use crate::similarity::cosine_slices;

/// Exact top-`k` by cosine over every non-sentinel item in `store`; ties are
/// broken by ascending id. `k` larger than the store returns everything.
pub fn brute_force_knn(store: &VectorStore, q: &DocumentVector, k: usize) -> Result<NeighborList> {
    if q.dim() != store.dim() {
        return Err(Error::DimensionMismatch { expected: store.dim(), found: q.dim() });
    }
    if q.is_sentinel() {
        return Ok(NeighborList::empty(q, k, store.len()));
    }
    let scored: Vec<(f64, &str)> = (0..store.len())
        .filter(|&i| !store.is_sentinel(i))
        .map(|i| (cosine_slices(&q.values, store.vector(i)), store.id(i)))
        .collect();
    Ok(NeighborList {
        query: Query::Vector(q.values.clone()),
        neighbors: top_k(scored, k),
        k,
        search_breadth: store.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::NormFlag;

    fn unit(id: &str, v: &[f32]) -> DocumentVector {
        DocumentVector { id: id.into(), values: v.to_vec(), norm: NormFlag::Unit }
    }

    #[test]
    fn orthogonal_pair() {
        let store = VectorStore::from_vectors(2, [unit("A", &[1.0, 0.0]), unit("B", &[0.0, 1.0])]).unwrap();
        let res = brute_force_knn(&store, &unit("q", &[1.0, 0.0]), 2).unwrap();
        let got: Vec<(&str, f64)> = res.neighbors.iter().map(|n| (n.id.as_str(), n.score)).collect();
        assert_eq!(got, vec![("A", 1.0), ("B", 0.0)]);
    }

    #[test]
    fn k_clamps_to_store() {
        let store = VectorStore::from_vectors(
            2,
            [unit("A", &[1.0, 0.0]), unit("B", &[0.0, 1.0]), DocumentVector::zero_sentinel("Z", 2)],
        )
        .unwrap();
        let res = brute_force_knn(&store, &unit("q", &[0.6, 0.8]), 50).unwrap();
        assert_eq!(res.len(), 2, "sentinel never returned");
    }

    #[test]
    fn ties_by_ascending_id() {
        let store = VectorStore::from_vectors(2, [unit("b", &[0.0, 1.0]), unit("a", &[1.0, 0.0])]).unwrap();
        let s = std::f32::consts::FRAC_1_SQRT_2;
        let res = brute_force_knn(&store, &unit("q", &[s, s]), 2).unwrap();
        assert_eq!(res.ids().collect::<Vec<_>>(), vec!["a", "b"]);
        for n in &res.neighbors {
            assert!((n.score - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        }
        assert_eq!(res.neighbors[0].score, res.neighbors[1].score);
    }

    #[test]
    fn sentinel_query_is_empty() {
        let store = VectorStore::from_vectors(2, [unit("A", &[1.0, 0.0])]).unwrap();
        assert!(brute_force_knn(&store, &DocumentVector::zero_sentinel("q", 2), 3).unwrap().is_empty());
    }
}
