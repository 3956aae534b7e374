//! Pipeline driver: ingest or synthesize, cluster, compute statistics, serve.
//!
//! Workspace layout:
//!
//! ```text
//! manifest.json            tokenized sentences
//! embeddings/layer_NN.emb  per-layer word embeddings (+ catalog.json)
//! models/layer_NN.model    centroids and labels
//! stats/layer_NN.json      statistics bundle
//! run_manifest.json        sha256 and config snapshot of every artifact
//! ```

pub mod artifacts;
pub mod config;
pub mod error;
pub mod pipeline;

pub use config::PipelineConfig;
pub use error::CliError;
