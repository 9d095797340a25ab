//! Word vectors, TF-IDF weights and document signatures.

mod document;
mod sgns;
mod store;
mod tfidf;

pub use document::{embed_document, vectorize_corpus, Signer};
pub use sgns::{sgns_gradients, sgns_loss, train_sgns, EmbeddingMatrix, SgnsParams};
pub use store::{DocumentVector, NormFlag, VectorStore, STORE_MAGIC, STORE_VERSION};
pub use tfidf::{fit_tfidf, IdfFormula, TfIdfModel};
