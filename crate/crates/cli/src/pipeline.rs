//! Pipeline stages. Each stage reads the previous stage's files from the
//! workspace, writes its own atomically and records their hashes in the run
//! manifest.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use embprobe_core::clustering::{fit_best_of, read_model_file, write_model_file};
use embprobe_core::corpus::{load_corpus, read_manifest, write_manifest, Sentence};
use embprobe_core::embedding_store::{
    generate_synthetic, layer_file_name, read_embeddings_file, read_index_file, write_embeddings_file,
    LayerCatalog, LayerEntry, CATALOG_FILE,
};
use embprobe_core::{LabeledCorpus, LayerStats};
use embprobe_server::{AppState, Snapshot};

use crate::artifacts::{write_atomic, write_json_atomic, RunManifest};
use crate::config::PipelineConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn manifest_path(config: &PipelineConfig) -> PathBuf {
    config.workspace.join(MANIFEST_FILE)
}

pub fn model_path(config: &PipelineConfig, layer: u32) -> PathBuf {
    config.workspace.join("models").join(format!("layer_{layer:02}.model"))
}

pub fn stats_path(config: &PipelineConfig, layer: u32) -> PathBuf {
    config.workspace.join("stats").join(format!("layer_{layer:02}.json"))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(CliError::MissingInput(path.to_path_buf())),
        Err(e) => Err(CliError::io(path, e)),
    }
}

fn write_sentences(config: &PipelineConfig, sentences: &[Sentence]) -> Result<PathBuf, CliError> {
    let path = manifest_path(config);
    let mut bytes = Vec::new();
    write_manifest(sentences, &mut bytes)?;
    write_atomic(&path, |f| std::io::Write::write_all(f, &bytes))?;
    RunManifest::record(&config.workspace, config, "ingest", None, &path)?;
    Ok(path)
}

/// Tokenizes the configured corpus into the sentence manifest.
pub fn cmd_ingest(config: &PipelineConfig) -> Result<PathBuf, CliError> {
    let corpus = config
        .corpus
        .as_ref()
        .ok_or_else(|| CliError::Config("no corpus configured".into()))?;
    let sentences = load_corpus(open(corpus)?)?;
    tracing::info!(sentences = sentences.len(), "ingested corpus");
    write_sentences(config, &sentences)
}

/// Generates a synthetic corpus and its layer files in place of extraction.
pub fn cmd_synth(config: &PipelineConfig) -> Result<LayerCatalog, CliError> {
    let synth = generate_synthetic(&config.synth)?;
    write_sentences(config, &synth.sentences)?;
    let dir = config.embeddings_dir();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut entries = Vec::new();
    for set in &synth.layers {
        let name = layer_file_name(set.layer());
        let path = dir.join(&name);
        write_embeddings_file(set, &path)?;
        RunManifest::record(&config.workspace, config, "synth", Some(set.layer()), &path)?;
        entries.push(LayerEntry {
            layer: set.layer(),
            path: PathBuf::from(name),
            records: set.len() as u64,
        });
    }
    let catalog = LayerCatalog {
        model: "synthetic".into(),
        num_layers: config.synth.layers,
        dim: config.synth.dim,
        layers: entries,
    };
    let path = dir.join(CATALOG_FILE);
    write_json_atomic(&path, &catalog)?;
    RunManifest::record(&config.workspace, config, "synth", None, &path)?;
    tracing::info!(
        sentences = synth.sentences.len(),
        layers = catalog.layers.len(),
        "generated synthetic embeddings"
    );
    Ok(catalog)
}

pub fn catalog(config: &PipelineConfig) -> Result<LayerCatalog, CliError> {
    let dir = config.embeddings_dir();
    if !dir.is_dir() {
        return Err(CliError::MissingInput(dir));
    }
    Ok(LayerCatalog::discover(&dir)?)
}

/// Layers selected by the configuration, all cataloged ones by default.
pub fn selected_layers(config: &PipelineConfig, catalog: &LayerCatalog) -> Result<Vec<u32>, CliError> {
    if config.layers.is_empty() {
        return Ok(catalog.layers.iter().map(|l| l.layer).collect());
    }
    for &l in &config.layers {
        catalog.entry(l)?;
    }
    Ok(config.layers.clone())
}

fn load_manifest(config: &PipelineConfig) -> Result<Option<Vec<Sentence>>, CliError> {
    let path = manifest_path(config);
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(read_manifest(open(&path)?)?))
}

#[derive(Debug, Clone)]
pub struct ClusterReport {
    pub layer: u32,
    pub path: PathBuf,
    pub sha256: String,
    pub sse: f64,
    pub restart_sse: Vec<f64>,
}

/// Fits k-means for one layer and writes the model file.
pub fn cmd_cluster(config: &PipelineConfig, layer: u32) -> Result<ClusterReport, CliError> {
    let catalog = catalog(config)?;
    let entry = catalog.entry(layer)?;
    let manifest = load_manifest(config)?;
    let emb_path = config.embeddings_dir().join(&entry.path);
    let set = read_embeddings_file(&emb_path, manifest.as_deref())?;
    if set.layer() != layer {
        return Err(CliError::Inconsistent(format!(
            "{} holds layer {}, cataloged as layer {layer}",
            emb_path.display(),
            set.layer()
        )));
    }
    let fit = fit_best_of(&set, &config.kmeans())?;
    let path = model_path(config, layer);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    write_model_file(&fit.model, &fit.assignments, &path)?;
    let artifact = RunManifest::record(&config.workspace, config, "cluster", Some(layer), &path)?;
    tracing::info!(layer, sse = fit.model.sse, restart = fit.model.restart_index, "clustered");
    Ok(ClusterReport {
        layer,
        path,
        sha256: artifact.sha256,
        sse: fit.model.sse,
        restart_sse: fit.restart_sse,
    })
}

/// Statistics of one layer from its embedding index and model file.
pub fn load_layer_stats(config: &PipelineConfig, layer: u32) -> Result<LayerStats, CliError> {
    let mpath = model_path(config, layer);
    if !mpath.exists() {
        return Err(CliError::MissingModel(layer));
    }
    let catalog = catalog(config)?;
    let emb_path = config.embeddings_dir().join(&catalog.entry(layer)?.path);
    let index = read_index_file(&emb_path)?;
    let (model, labels) = read_model_file(&mpath)?;
    if model.layer != layer || labels.len() != index.records.len() {
        return Err(CliError::Inconsistent(format!(
            "model {} (layer {}, {} labels) does not match {} (layer {layer}, {} records); rerun cluster",
            mpath.display(),
            model.layer,
            labels.len(),
            emb_path.display(),
            index.records.len()
        )));
    }
    let corpus = LabeledCorpus::from_records(&index.records, &labels)?;
    Ok(LayerStats::compute(layer, corpus, config.stats())?)
}

/// Computes one layer's statistics bundle and writes it as JSON.
pub fn cmd_stats(config: &PipelineConfig, layer: u32) -> Result<PathBuf, CliError> {
    let stats = load_layer_stats(config, layer)?;
    let path = stats_path(config, layer);
    write_json_atomic(&path, &stats.bundle(stats.k()))?;
    RunManifest::record(&config.workspace, config, "stats", Some(layer), &path)?;
    tracing::info!(layer, path = %path.display(), "wrote statistics");
    Ok(path)
}

/// Loads every selected layer that has a model. Explicitly requested layers
/// must all have one.
pub fn load_snapshot(config: &PipelineConfig) -> Result<Snapshot, CliError> {
    let catalog = catalog(config)?;
    let explicit = !config.layers.is_empty();
    let mut layers = BTreeMap::new();
    let selected = selected_layers(config, &catalog)?;
    for &layer in &selected {
        match load_layer_stats(config, layer) {
            Ok(s) => {
                layers.insert(layer, Arc::new(s));
            }
            Err(CliError::MissingModel(l)) if !explicit => {
                tracing::warn!(layer = l, "no model, layer not served");
            }
            Err(e) => return Err(e),
        }
    }
    if layers.is_empty() {
        return Err(CliError::MissingModel(selected.first().copied().unwrap_or(0)));
    }
    Ok(Snapshot {
        model: catalog.model,
        dim: catalog.dim,
        num_layers: catalog.num_layers,
        layers,
    })
}

pub async fn cmd_serve(config: &PipelineConfig) -> Result<(), CliError> {
    let state = AppState::new(load_snapshot(config)?);
    let addr = format!("{}:{}", config.host, config.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| CliError::io(Path::new(&addr), e))?;
    embprobe_server::serve(listener, state, config.ui_dir.clone())
        .await
        .map_err(|e| CliError::io(Path::new(&addr), e))
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub layers: Vec<u32>,
    pub clusters: Vec<ClusterReport>,
    pub stats: Vec<PathBuf>,
}

/// Every stage up to statistics: ingest when a corpus is configured
/// (layer files then come from the extractor), otherwise synthesize.
pub fn run_all(config: &PipelineConfig) -> Result<RunSummary, CliError> {
    if config.corpus.is_some() {
        cmd_ingest(config)?;
    } else {
        cmd_synth(config)?;
    }
    let catalog = catalog(config)?;
    let layers = selected_layers(config, &catalog)?;
    let mut clusters = Vec::new();
    let mut stats = Vec::new();
    for &layer in &layers {
        clusters.push(cmd_cluster(config, layer)?);
        stats.push(cmd_stats(config, layer)?);
    }
    Ok(RunSummary {
        layers,
        clusters,
        stats,
    })
}
