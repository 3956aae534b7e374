use std::fs::{self, File};
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::format::{peek_header, read_index_file};
use super::StoreError;

pub const CATALOG_FILE: &str = "catalog.json";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("no embedding files found in {0}")]
    NoLayers(PathBuf),
    #[error("layer {layer}: {found} records, layer {first_layer} has {expected}")]
    RecordCountMismatch {
        layer: u32,
        found: u64,
        first_layer: u32,
        expected: u64,
    },
    #[error("layer {layer}: dim {found}, expected {expected}")]
    DimMismatch { layer: u32, found: usize, expected: usize },
    #[error("layer {layer} record {record} disagrees with layer {first_layer} on word provenance")]
    ProvenanceMismatch {
        layer: u32,
        first_layer: u32,
        record: usize,
    },
    #[error("layer {0} is not in the catalog")]
    UnknownLayer(u32),
    #[error("malformed catalog: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Store {
        path: PathBuf,
        #[source]
        source: StoreError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub layer: u32,
    /// Relative to the catalog directory.
    pub path: PathBuf,
    pub records: u64,
}

/// Describes the layer files exported for one corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerCatalog {
    pub model: String,
    pub num_layers: u32,
    pub dim: usize,
    pub layers: Vec<LayerEntry>,
}

/// File name used for a layer inside an embeddings directory.
pub fn layer_file_name(layer: u32) -> String {
    format!("layer_{layer:02}.emb")
}

impl LayerCatalog {
    /// Loads `catalog.json` from `dir`, or builds a catalog from the headers
    /// of `layer_NN.emb` files when there is none.
    pub fn discover(dir: &Path) -> Result<Self, CatalogError> {
        let catalog_path = dir.join(CATALOG_FILE);
        let catalog = if catalog_path.exists() {
            serde_json::from_reader(BufReader::new(File::open(&catalog_path)?))?
        } else {
            Self::scan(dir)?
        };
        catalog.check_counts()?;
        Ok(catalog)
    }

    fn scan(dir: &Path) -> Result<Self, CatalogError> {
        let mut layers = Vec::new();
        let mut dim = None;
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let Some(layer) = name
                .strip_prefix("layer_")
                .and_then(|n| n.strip_suffix(".emb"))
                .and_then(|n| n.parse::<u32>().ok())
            else {
                continue;
            };
            let header = peek_header(&path).map_err(|source| CatalogError::Store {
                path: path.clone(),
                source,
            })?;
            if header.layer != layer {
                tracing::warn!(file = name, header = header.layer, "file name and header layer differ");
            }
            match dim {
                None => dim = Some(header.dim),
                Some(d) if d != header.dim => {
                    return Err(CatalogError::DimMismatch {
                        layer: header.layer,
                        found: header.dim,
                        expected: d,
                    })
                }
                _ => {}
            }
            layers.push(LayerEntry {
                layer: header.layer,
                path: PathBuf::from(name),
                records: header.count,
            });
        }
        layers.sort_by_key(|l| l.layer);
        let dim = dim.ok_or_else(|| CatalogError::NoLayers(dir.to_path_buf()))?;
        Ok(Self {
            model: "unknown".into(),
            num_layers: layers.iter().filter(|l| l.layer > 0).count() as u32,
            dim,
            layers,
        })
    }

    /// Record counts must agree across layers.
    pub fn check_counts(&self) -> Result<(), CatalogError> {
        if let Some(first) = self.layers.first() {
            for l in &self.layers[1..] {
                if l.records != first.records {
                    return Err(CatalogError::RecordCountMismatch {
                        layer: l.layer,
                        found: l.records,
                        first_layer: first.layer,
                        expected: first.records,
                    });
                }
            }
        }
        Ok(())
    }

    /// Reads every layer's record index and checks that all layers list the
    /// same (sentence, position, surface) sequence.
    pub fn verify_provenance(&self, dir: &Path) -> Result<(), CatalogError> {
        let mut reference: Option<(u32, Vec<super::EmbeddingRecord>)> = None;
        for entry in &self.layers {
            let path = dir.join(&entry.path);
            let index = read_index_file(&path).map_err(|source| CatalogError::Store {
                path: path.clone(),
                source,
            })?;
            if index.dim != self.dim {
                return Err(CatalogError::DimMismatch {
                    layer: entry.layer,
                    found: index.dim,
                    expected: self.dim,
                });
            }
            match &reference {
                None => reference = Some((entry.layer, index.records)),
                Some((first_layer, first)) => {
                    if first.len() != index.records.len() {
                        return Err(CatalogError::RecordCountMismatch {
                            layer: entry.layer,
                            found: index.records.len() as u64,
                            first_layer: *first_layer,
                            expected: first.len() as u64,
                        });
                    }
                    if let Some(record) = first.iter().zip(&index.records).position(|(a, b)| a != b) {
                        return Err(CatalogError::ProvenanceMismatch {
                            layer: entry.layer,
                            first_layer: *first_layer,
                            record,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn entry(&self, layer: u32) -> Result<&LayerEntry, CatalogError> {
        self.layers
            .iter()
            .find(|l| l.layer == layer)
            .ok_or(CatalogError::UnknownLayer(layer))
    }

    pub fn write(&self, dir: &Path) -> Result<(), CatalogError> {
        let json = serde_json::to_vec_pretty(self)?;
        fs::write(dir.join(CATALOG_FILE), json)?;
        Ok(())
    }
}
