//! Unsupervised probing of contextualized word embeddings.
//!
//! The pipeline clusters per-word embeddings of one model layer with k-means
//! (seeds restricted to distinct word types, best of several restarts), then
//! summarizes the clustering with three statistics:
//!
//! * cluster-word membership: for every word type, the fraction of its
//!   occurrences that land in each cluster, smoothed per cluster with a KDE;
//! * cluster spans: maximal runs of same-cluster words ("phrases") and a
//!   histogram of their lengths;
//! * pairwise co-occurrences of phrases inside a sentence, indexed by the
//!   number of phrases between them.
//!
//! [`query`] evaluates the linked-view interactions (brushes and cell
//! selections) over those statistics.

pub mod clustering;
pub mod corpus;
pub mod embedding_store;
pub mod query;
pub mod statistics;

mod binio;

pub use clustering::{AssignmentTable, ClusterModel, KMeansConfig};
pub use corpus::{Sentence, SubwordAlignment, WordRef};
pub use embedding_store::{EmbeddingSet, LayerCatalog};
pub use statistics::{LabeledCorpus, LayerStats, StatsConfig};

/// Cluster index, 0-based.
pub type ClusterId = usize;
