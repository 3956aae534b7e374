use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use embprobe_core::embedding_store::SyntheticParams;
use embprobe_core::{KMeansConfig, StatsConfig};

use crate::error::CliError;

/// Pipeline configuration. Read from a TOML file; command-line flags
/// override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Directory holding every stage's outputs.
    pub workspace: PathBuf,
    /// Plain-text corpus, one sentence per line.
    pub corpus: Option<PathBuf>,
    /// Layer files; defaults to `<workspace>/embeddings`.
    pub embeddings: Option<PathBuf>,
    /// Layers to process; empty means every layer found.
    pub layers: Vec<u32>,
    pub k: usize,
    pub restarts: usize,
    pub rng_seed: u64,
    pub tol: f64,
    pub max_iters: usize,
    pub max_span: usize,
    pub max_spacing: usize,
    pub bandwidth: f64,
    pub host: String,
    pub port: u16,
    /// Static UI bundle served next to the API.
    pub ui_dir: Option<PathBuf>,
    pub synth: SyntheticParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let km = KMeansConfig::default();
        let st = StatsConfig::default();
        Self {
            workspace: PathBuf::from("embprobe-run"),
            corpus: None,
            embeddings: None,
            layers: Vec::new(),
            k: km.k,
            restarts: km.restarts,
            rng_seed: km.rng_seed,
            tol: km.tol,
            max_iters: km.max_iters,
            max_span: st.max_span,
            max_spacing: st.max_spacing,
            bandwidth: st.bandwidth,
            host: "127.0.0.1".into(),
            port: 8080,
            ui_dir: None,
            synth: SyntheticParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.kmeans().validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.stats().validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(CliError::Config(format!("tol must be a finite non-negative number, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(CliError::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn kmeans(&self) -> KMeansConfig {
        KMeansConfig {
            k: self.k,
            restarts: self.restarts,
            max_iters: self.max_iters,
            tol: self.tol,
            rng_seed: self.rng_seed,
        }
    }

    pub fn stats(&self) -> StatsConfig {
        StatsConfig {
            max_span: self.max_span,
            max_spacing: self.max_spacing,
            bandwidth: self.bandwidth,
        }
    }

    pub fn embeddings_dir(&self) -> PathBuf {
        self.embeddings
            .clone()
            .unwrap_or_else(|| self.workspace.join("embeddings"))
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long, short = 'c', global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workspace: Option<PathBuf>,
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    /// Comma-separated layer list.
    #[arg(long, global = true, value_delimiter = ',')]
    pub layers: Option<Vec<u32>>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true)]
    pub rng_seed: Option<u64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    #[arg(long, global = true)]
    pub max_span: Option<usize>,
    #[arg(long, global = true)]
    pub max_spacing: Option<usize>,
    #[arg(long, global = true)]
    pub bandwidth: Option<f64>,
    #[arg(long, global = true)]
    pub host: Option<String>,
    #[arg(long, global = true)]
    pub port: Option<u16>,
    #[arg(long, global = true)]
    pub ui_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    c.$f = v.clone();
                }
            )*};
        }
        set!(workspace, layers, k, restarts, rng_seed, tol, max_iters, max_span, max_spacing, bandwidth, host, port);
        if self.corpus.is_some() {
            c.corpus = self.corpus.clone();
        }
        if self.embeddings.is_some() {
            c.embeddings = self.embeddings.clone();
        }
        if self.ui_dir.is_some() {
            c.ui_dir = self.ui_dir.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

/// Overrides for the synthetic generator.
#[derive(Debug, Default, Args)]
pub struct SynthOverrides {
    #[arg(long)]
    pub sentences: Option<usize>,
    #[arg(long)]
    pub words_per_sentence: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub modes: Option<usize>,
    /// Number of pseudo-layers to generate.
    #[arg(long)]
    pub num_layers: Option<u32>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub separation: Option<f32>,
    #[arg(long)]
    pub stddev: Option<f32>,
    #[arg(long)]
    pub synth_seed: Option<u64>,
}

impl SynthOverrides {
    pub fn apply(&self, p: &mut SyntheticParams) {
        let pairs = [
            (self.sentences, &mut p.num_sentences),
            (self.words_per_sentence, &mut p.words_per_sentence),
            (self.dim, &mut p.dim),
            (self.modes, &mut p.num_modes),
        ];
        for (v, slot) in pairs {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(v) = self.num_layers {
            p.layers = v;
        }
        if self.vocab_size.is_some() {
            p.vocab_size = self.vocab_size;
        }
        if let Some(v) = self.separation {
            p.separation = v;
        }
        if let Some(v) = self.stddev {
            p.stddev = v;
        }
        if let Some(v) = self.synth_seed {
            p.seed = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c: PipelineConfig = toml::from_str("k = 3\n[synth]\ndim = 4\n").unwrap();
        assert_eq!(c.k, 3);
        assert_eq!(c.restarts, 5);
        assert_eq!(c.synth.dim, 4);
        assert_eq!(c.synth.num_modes, 4);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<PipelineConfig>("kk = 3\n").is_err());
        assert!(toml::from_str::<PipelineConfig>("[synth]\ndims = 3\n").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "k = 3\nrestarts = 2\n").unwrap();
        let o = Overrides {
            config: Some(path),
            k: Some(7),
            ..Default::default()
        };
        let c = o.resolve().unwrap();
        assert_eq!((c.k, c.restarts), (7, 2));
    }

    #[test]
    fn invalid_values_fail_validation() {
        let o = Overrides {
            k: Some(0),
            ..Default::default()
        };
        assert!(matches!(o.resolve(), Err(CliError::Config(_))));
    }
}
