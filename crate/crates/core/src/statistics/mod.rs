//! Cluster-level statistics over a labelled corpus.
//!
//! Everything here is a fold over [`LabeledCorpus`]: word-type membership
//! percentages and their densities, phrase (maximal same-label run)
//! decomposition, span-length histograms, phrase co-occurrence counts by
//! spacing, and the cluster display priority.

mod bundle;
mod cooccurrence;
mod density;
mod membership;
mod phrases;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::AssignmentTable;
use crate::embedding_store::EmbeddingRecord;
use crate::ClusterId;

pub use bundle::{
    membership_histogram, ClusterSummary, SparseTensor, StatsBundle, HISTOGRAM_BINS, SCHEMA_VERSION,
};
pub use cooccurrence::{cooccurrence_filtered, cooccurrence_tensor, CooccurrenceTensor};
pub use density::{grid, kde_reflected, membership_density, DensityCurve, GRID_POINTS};
pub use membership::{cluster_priority, membership_percentages, quantize, MembershipTable};
pub use phrases::{extract_phrases, runs, span_histogram, Phrase, PhraseIndex, SpanHistogram};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("{labels} labels for {records} records")]
    LengthMismatch { labels: usize, records: usize },
    #[error("label {label} is not below k = {k}")]
    LabelOutOfRange { label: u32, k: usize },
    #[error("sentence {0}: word positions are not 0..n")]
    SparsePositions(u64),
    #[error("sentence {0}: words and labels differ in length")]
    RaggedSentence(u64),
    #[error("bandwidth must be positive and finite, got {0}")]
    BadBandwidth(f64),
    #[error("max_span and k must be positive")]
    BadShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsConfig {
    /// Longest span with its own histogram column; longer spans share it.
    pub max_span: usize,
    /// Largest phrase spacing counted (0 = adjacent phrases).
    pub max_spacing: usize,
    pub bandwidth: f64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            max_span: 10,
            max_spacing: 9,
            bandwidth: 0.05,
        }
    }
}

impl StatsConfig {
    pub fn validate(&self) -> Result<(), StatsError> {
        if self.max_span == 0 {
            return Err(StatsError::BadShape);
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(StatsError::BadBandwidth(self.bandwidth));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    pub id: u64,
    /// Word-type id per position.
    pub words: Vec<u32>,
    pub labels: Vec<u32>,
}

/// Sentences with a word type and cluster label for every position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCorpus {
    k: usize,
    vocab: Vec<String>,
    sentences: Vec<LabeledSentence>,
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, u32>,
    vocab: Vec<String>,
}

impl Interner {
    fn id(&mut self, w: &str) -> u32 {
        if let Some(&id) = self.ids.get(w) {
            return id;
        }
        let id = self.vocab.len() as u32;
        self.ids.insert(w.to_string(), id);
        self.vocab.push(w.to_string());
        id
    }
}

impl LabeledCorpus {
    /// Pairs embedding records (sorted by word reference) with their labels.
    /// Every sentence present must be covered at positions `0..n`.
    pub fn from_records(
        records: &[EmbeddingRecord],
        assignments: &AssignmentTable,
    ) -> Result<Self, StatsError> {
        if records.len() != assignments.len() {
            return Err(StatsError::LengthMismatch {
                labels: assignments.len(),
                records: records.len(),
            });
        }
        let mut interner = Interner::default();
        let mut sentences: Vec<LabeledSentence> = Vec::new();
        for (r, &label) in records.iter().zip(&assignments.labels) {
            if label as usize >= assignments.k {
                return Err(StatsError::LabelOutOfRange {
                    label,
                    k: assignments.k,
                });
            }
            let sid = r.word.sentence_id;
            if sentences.last().is_none_or(|s| s.id != sid) {
                sentences.push(LabeledSentence {
                    id: sid,
                    words: Vec::new(),
                    labels: Vec::new(),
                });
            }
            let s = sentences.last_mut().expect("just pushed");
            if r.word.position as usize != s.words.len() {
                return Err(StatsError::SparsePositions(sid));
            }
            s.words.push(interner.id(&r.surface));
            s.labels.push(label);
        }
        Ok(Self {
            k: assignments.k,
            vocab: interner.vocab,
            sentences,
        })
    }

    /// Builds a corpus from `(sentence_id, words, labels)` triples.
    pub fn from_words<S: AsRef<str>>(
        k: usize,
        sentences: impl IntoIterator<Item = (u64, Vec<S>, Vec<u32>)>,
    ) -> Result<Self, StatsError> {
        if k == 0 {
            return Err(StatsError::BadShape);
        }
        let mut interner = Interner::default();
        let mut out = Vec::new();
        for (id, words, labels) in sentences {
            if words.len() != labels.len() {
                return Err(StatsError::RaggedSentence(id));
            }
            if let Some(&label) = labels.iter().find(|&&l| l as usize >= k) {
                return Err(StatsError::LabelOutOfRange { label, k });
            }
            out.push(LabeledSentence {
                id,
                words: words.iter().map(|w| interner.id(w.as_ref())).collect(),
                labels,
            });
        }
        Ok(Self {
            k,
            vocab: interner.vocab,
            sentences: out,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn word(&self, type_id: u32) -> &str {
        &self.vocab[type_id as usize]
    }

    pub fn sentences(&self) -> &[LabeledSentence] {
        &self.sentences
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(|s| s.words.len()).sum()
    }
}

/// All statistics of one layer, computed once and shared by queries.
#[derive(Debug, Clone)]
pub struct LayerStats {
    pub layer: u32,
    pub config: StatsConfig,
    pub corpus: LabeledCorpus,
    pub membership: MembershipTable,
    pub phrases: PhraseIndex,
    pub spans: SpanHistogram,
    pub cooccurrence: CooccurrenceTensor,
    pub densities: Vec<DensityCurve>,
    pub priority: Vec<ClusterId>,
}

impl LayerStats {
    pub fn compute(layer: u32, corpus: LabeledCorpus, config: StatsConfig) -> Result<Self, StatsError> {
        config.validate()?;
        let membership = membership_percentages(&corpus);
        let phrases = extract_phrases(&corpus);
        let spans = span_histogram(&phrases, corpus.k(), config.max_span);
        let cooccurrence = cooccurrence_tensor(&phrases, corpus.k(), config.max_spacing);
        let densities = (0..corpus.k())
            .map(|l| membership_density(&membership, l, config.bandwidth))
            .collect::<Result<Vec<_>, _>>()?;
        let priority = cluster_priority(&membership);
        Ok(Self {
            layer,
            config,
            corpus,
            membership,
            phrases,
            spans,
            cooccurrence,
            densities,
            priority,
        })
    }

    pub fn k(&self) -> usize {
        self.corpus.k()
    }
}
