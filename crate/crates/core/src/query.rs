//! Linked-view queries over one layer's statistics.
//!
//! A membership brush selects word types by their percentage in one anchor
//! cluster and filters co-occurrences of every cluster by whether the LEFT
//! phrase contains a selected word. A span brush keeps only the left
//! phrases of a single cluster whose length falls in a range. A cell
//! selection lists the sentences behind one `(left, right, spacing)` count,
//! under the active brush if any. All queries are read-only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::statistics::{
    cooccurrence_filtered, membership_histogram, CooccurrenceTensor, LayerStats, Phrase,
};
use crate::ClusterId;

pub const DEFAULT_PAGE_SIZE: usize = 25;

#[derive(Debug, Error, PartialEq)]
pub enum QueryError {
    #[error("unknown cluster {cluster} (k = {k})")]
    UnknownCluster { cluster: ClusterId, k: usize },
    #[error("invalid brush: {0}")]
    InvalidBrush(String),
    #[error("spacing {spacing} exceeds max_spacing {max}")]
    SpacingOutOfRange { spacing: usize, max: usize },
    #[error("page_size must be positive")]
    ZeroPageSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipBrush {
    pub cluster: ClusterId,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanBrush {
    pub cluster: ClusterId,
    pub lo: usize,
    /// `hi == max_span` also admits every longer span, matching the
    /// histogram's final bucket.
    pub hi: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Brush {
    Membership(MembershipBrush),
    Span(SpanBrush),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSelection {
    pub left: ClusterId,
    pub right: ClusterId,
    pub spacing: usize,
    #[serde(default)]
    pub brush: Option<Brush>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipOverlay {
    pub brush: MembershipBrush,
    /// Selected word types, sorted.
    pub words: Vec<String>,
    /// Per cluster (indexed by cluster id), the membership histogram of
    /// the selected words.
    pub histograms: Vec<Vec<u32>>,
    pub cooccurrence: CooccurrenceTensor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanOverlay {
    pub brush: SpanBrush,
    /// Counts for the brushed cluster as left: `k x (max_spacing + 1)`.
    pub row: Vec<u64>,
    pub max_spacing: usize,
}

impl SpanOverlay {
    pub fn cell(&self, right: ClusterId) -> &[u64] {
        let w = self.max_spacing + 1;
        &self.row[right * w..(right + 1) * w]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitWord {
    pub text: String,
    pub cluster: ClusterId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseSpan {
    pub cluster: ClusterId,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceHit {
    pub sentence_id: u64,
    pub words: Vec<HitWord>,
    pub phrases: Vec<PhraseSpan>,
    /// Every matching `(left phrase, right phrase)` pair, as indices into
    /// `phrases`.
    pub pairs: Vec<[usize; 2]>,
    /// First matching pair.
    pub highlight: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePage {
    /// Matching sentences over all pages.
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
    pub hits: Vec<SentenceHit>,
}

/// Read-only query surface over one layer.
#[derive(Debug, Clone, Copy)]
pub struct QueryEngine<'a> {
    stats: &'a LayerStats,
}

/// Left-phrase predicate derived from a brush.
enum LeftFilter {
    All,
    Words(Vec<bool>),
    Spans { cluster: u32, lo: usize, hi: usize },
}

impl<'a> QueryEngine<'a> {
    pub fn new(stats: &'a LayerStats) -> Self {
        Self { stats }
    }

    fn check_cluster(&self, cluster: ClusterId) -> Result<(), QueryError> {
        let k = self.stats.k();
        if cluster >= k {
            return Err(QueryError::UnknownCluster { cluster, k });
        }
        Ok(())
    }

    fn brushed_words(&self, b: &MembershipBrush) -> Result<Vec<bool>, QueryError> {
        self.check_cluster(b.cluster)?;
        if !(b.lo > 0.0 && b.lo <= b.hi && b.hi <= 1.0) {
            return Err(QueryError::InvalidBrush(format!(
                "need 0 < lo <= hi <= 1, got [{}, {}]",
                b.lo, b.hi
            )));
        }
        let table = &self.stats.membership;
        Ok((0..table.num_types() as u32)
            .map(|w| {
                let p = table.percentage(w, b.cluster);
                b.lo <= p && p <= b.hi
            })
            .collect())
    }

    fn span_bounds(&self, b: &SpanBrush) -> Result<(usize, usize), QueryError> {
        self.check_cluster(b.cluster)?;
        let max_span = self.stats.config.max_span;
        if !(1 <= b.lo && b.lo <= b.hi && b.hi <= max_span) {
            return Err(QueryError::InvalidBrush(format!(
                "need 1 <= lo <= hi <= {max_span}, got [{}, {}]",
                b.lo, b.hi
            )));
        }
        let hi = if b.hi == max_span { usize::MAX } else { b.hi };
        Ok((b.lo, hi))
    }

    fn left_filter(&self, brush: Option<&Brush>) -> Result<LeftFilter, QueryError> {
        Ok(match brush {
            None => LeftFilter::All,
            Some(Brush::Membership(b)) => LeftFilter::Words(self.brushed_words(b)?),
            Some(Brush::Span(b)) => {
                let (lo, hi) = self.span_bounds(b)?;
                LeftFilter::Spans {
                    cluster: b.cluster as u32,
                    lo,
                    hi,
                }
            }
        })
    }

    fn keeps(&self, filter: &LeftFilter, sentence: usize, p: &Phrase) -> bool {
        match filter {
            LeftFilter::All => true,
            LeftFilter::Words(selected) => {
                let words = &self.stats.corpus.sentences()[sentence].words;
                words[p.start as usize..=p.end as usize]
                    .iter()
                    .any(|&w| selected[w as usize])
            }
            LeftFilter::Spans { cluster, lo, hi } => {
                p.cluster == *cluster && (*lo..=*hi).contains(&p.len())
            }
        }
    }

    /// Co-occurrence counts restricted by `filter` on the left phrase.
    fn filtered_tensor(&self, filter: &LeftFilter) -> CooccurrenceTensor {
        let stats = self.stats;
        cooccurrence_filtered(&stats.phrases, stats.k(), stats.config.max_spacing, |i, p| {
            self.keeps(filter, i, p)
        })
    }

    pub fn apply_membership_brush(&self, brush: MembershipBrush) -> Result<MembershipOverlay, QueryError> {
        let selected = self.brushed_words(&brush)?;
        let corpus = &self.stats.corpus;
        let mut words: Vec<String> = selected
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(w, _)| corpus.word(w as u32).to_string())
            .collect();
        words.sort();
        let histograms = (0..self.stats.k())
            .map(|c| membership_histogram(&self.stats.membership, c, |w| selected[w as usize]))
            .collect();
        let cooccurrence = self.filtered_tensor(&LeftFilter::Words(selected));
        Ok(MembershipOverlay {
            brush,
            words,
            histograms,
            cooccurrence,
        })
    }

    pub fn apply_span_brush(&self, brush: SpanBrush) -> Result<SpanOverlay, QueryError> {
        let (lo, hi) = self.span_bounds(&brush)?;
        let tensor = self.filtered_tensor(&LeftFilter::Spans {
            cluster: brush.cluster as u32,
            lo,
            hi,
        });
        Ok(SpanOverlay {
            brush,
            row: tensor.row(brush.cluster).to_vec(),
            max_spacing: self.stats.config.max_spacing,
        })
    }

    /// Sentences holding at least one phrase pair matching the selection,
    /// ordered by sentence id. `page` is 0-based; pages past the end are
    /// empty.
    pub fn select_cell(
        &self,
        sel: &CellSelection,
        page: usize,
        page_size: usize,
    ) -> Result<SentencePage, QueryError> {
        self.check_cluster(sel.left)?;
        self.check_cluster(sel.right)?;
        let max = self.stats.config.max_spacing;
        if sel.spacing > max {
            return Err(QueryError::SpacingOutOfRange {
                spacing: sel.spacing,
                max,
            });
        }
        if page_size == 0 {
            return Err(QueryError::ZeroPageSize);
        }
        let filter = self.left_filter(sel.brush.as_ref())?;

        let mut matches: Vec<(usize, Vec<[usize; 2]>)> = Vec::new();
        for (i, phrases) in self.stats.phrases.iter_sentences().enumerate() {
            let pairs: Vec<[usize; 2]> = phrases
                .iter()
                .enumerate()
                .filter_map(|(a, left)| {
                    let b = a + sel.spacing + 1;
                    let right = phrases.get(b)?;
                    (left.cluster as usize == sel.left
                        && right.cluster as usize == sel.right
                        && self.keeps(&filter, i, left))
                    .then_some([a, b])
                })
                .collect();
            if !pairs.is_empty() {
                matches.push((i, pairs));
            }
        }
        let total = matches.len();
        let hits = matches
            .into_iter()
            .skip(page.saturating_mul(page_size))
            .take(page_size)
            .map(|(i, pairs)| self.hit(i, pairs))
            .collect();
        Ok(SentencePage {
            total,
            page,
            page_size,
            hits,
        })
    }

    fn hit(&self, sentence: usize, pairs: Vec<[usize; 2]>) -> SentenceHit {
        let corpus = &self.stats.corpus;
        let s = &corpus.sentences()[sentence];
        SentenceHit {
            sentence_id: s.id,
            words: s
                .words
                .iter()
                .zip(&s.labels)
                .map(|(&w, &l)| HitWord {
                    text: corpus.word(w).to_string(),
                    cluster: l as usize,
                })
                .collect(),
            phrases: self
                .stats
                .phrases
                .sentence(sentence)
                .iter()
                .map(|p| PhraseSpan {
                    cluster: p.cluster as usize,
                    start: p.start as usize,
                    end: p.end as usize,
                })
                .collect(),
            highlight: pairs[0],
            pairs,
        }
    }
}
