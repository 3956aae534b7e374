use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use embprobe_core::clustering::{ClusterError, ModelFileError};
use embprobe_core::corpus::CorpusError;
use embprobe_core::embedding_store::{CatalogError, StoreError, SyntheticError};
use embprobe_core::statistics::StatsError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing model for layer {0}")]
    MissingModel(u32),
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Model(#[from] ModelFileError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Synthetic(#[from] SyntheticError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 validation, 2 I/O, 3 internal invariant.
    pub fn exit_code(&self) -> i32 {
        use CliError::*;
        match self {
            Config(_) | MissingModel(_) | Inconsistent(_) => 1,
            MissingInput(_) | Io { .. } => 2,
            Corpus(CorpusError::Io(_)) => 2,
            Store(StoreError::Io(_)) => 2,
            Catalog(CatalogError::Io(_)) => 2,
            Catalog(CatalogError::Store {
                source: StoreError::Io(_),
                ..
            }) => 2,
            Model(ModelFileError::Io(_)) => 2,
            Corpus(_) | Store(_) | Catalog(_) | Model(_) | Synthetic(_) => 1,
            Cluster(ClusterError::TooFewWordTypes { .. })
            | Cluster(ClusterError::InvalidK(_))
            | Cluster(ClusterError::NoRestarts) => 1,
            Stats(StatsError::BadBandwidth(_)) | Stats(StatsError::BadShape) => 1,
            Cluster(_) | Stats(_) | Invariant(_) => 3,
        }
    }
}
