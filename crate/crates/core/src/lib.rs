//! Word embeddings for a chemistry corpus: ingestion, cleaning, chemical name
//! handling, co-occurrence counting, skip-gram and GloVe training, and
//! embedding-space queries.

pub mod chemlex;
pub mod cooc;
pub mod embedding;
pub mod embedspace;
pub mod error;
pub mod glove;
pub mod ingest;
pub mod sgns;
pub mod textprep;

pub use embedding::{Algorithm, EmbeddingModel, Matrix, QueryVectors};
pub use error::{Error, Result};
pub use textprep::{TokenizedCorpus, Vocabulary};
