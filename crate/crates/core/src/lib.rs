//! Technological signatures for patent corpora.
//!
//! The pipeline turns patent abstracts into dense signature vectors
//! (skip-gram word vectors combined with TF-IDF weights), indexes them in a
//! forest of random-projection trees for approximate nearest-neighbor search,
//! and derives a thresholded patent-to-patent similarity graph. On top of the
//! graph sit the temporal indicators (past/future similarity), country-level
//! knowledge-flow matrices, and two validation suites.
//!
//! ```text
//! corpus ─► embedding ─► ann ─► similarity ─► indicators
//!                          │                     │
//!                          └────────► eval ◄─────┘
//! ```

pub mod ann;
pub mod config;
pub mod corpus;
pub mod embedding;
mod error;
pub mod eval;
pub mod indicators;
pub mod io;
pub mod similarity;
pub mod synth;

pub use ann::{brute_force_knn, ForestParams, NeighborList, RpForest, RpTree};
pub use config::PipelineConfig;
pub use corpus::{BigramTable, FilterPolicy, IpcCode, PatentRecord, Vocabulary};
pub use embedding::{DocumentVector, EmbeddingMatrix, NormFlag, SgnsParams, TfIdfModel, VectorStore};
pub use error::{Error, Result};
pub use indicators::{CountryFlowMatrix, PatentIndicators, TemporalParams};
pub use similarity::{cosine, SimilarityEdge, SimilarityGraph};
