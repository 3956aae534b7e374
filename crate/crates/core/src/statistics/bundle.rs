//! JSON transport form of one layer's statistics.

use serde::{Deserialize, Serialize};

use super::{grid, quantize, CooccurrenceTensor, LayerStats, MembershipTable};
use crate::ClusterId;

pub const SCHEMA_VERSION: u32 = 1;
pub const HISTOGRAM_BINS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster: ClusterId,
    /// Stable shape identifier; equal to the cluster index.
    pub glyph: usize,
    pub unique_words: usize,
    pub tokens: u64,
    /// Word types per membership-percentage bin, `HISTOGRAM_BINS` bins
    /// over `(0, 1]`.
    pub membership_histogram: Vec<u32>,
    /// Density at each point of `density_x`.
    pub density: Vec<f64>,
    /// Phrase counts for span lengths `1..=max_span`, the last bucket
    /// including longer spans.
    pub span_counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseTensor {
    pub max_spacing: usize,
    /// `[left, right, spacing, count]`, nonzero counts only.
    pub entries: Vec<[u64; 4]>,
}

impl SparseTensor {
    pub fn from_dense(t: &CooccurrenceTensor, keep: impl Fn(ClusterId) -> bool) -> Self {
        Self {
            max_spacing: t.max_spacing,
            entries: t
                .nonzero()
                .filter(|&(l, r, _, _)| keep(l) && keep(r))
                .map(|(l, r, s, c)| [l as u64, r as u64, s as u64, c])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsBundle {
    pub schema_version: u32,
    pub layer: u32,
    pub k: usize,
    pub max_span: usize,
    pub max_spacing: usize,
    pub bandwidth: f64,
    pub histogram_bins: usize,
    pub density_x: Vec<f64>,
    /// Shown clusters in display order.
    pub priority: Vec<ClusterId>,
    /// One entry per shown cluster, in `priority` order.
    pub clusters: Vec<ClusterSummary>,
    /// Restricted to pairs of shown clusters.
    pub cooccurrence: SparseTensor,
}

/// Word-type histogram of nonzero percentages in `cluster`, restricted to
/// the types accepted by `keep`.
pub fn membership_histogram(
    table: &MembershipTable,
    cluster: ClusterId,
    keep: impl Fn(u32) -> bool,
) -> Vec<u32> {
    let mut h = vec![0u32; HISTOGRAM_BINS];
    for (_, p) in table.members(cluster).filter(|(w, _)| keep(*w)) {
        h[quantize(p, HISTOGRAM_BINS)] += 1;
    }
    h
}

impl LayerStats {
    /// Bundle for the first `top_n` clusters in priority order (all of
    /// them when `top_n >= k`).
    pub fn bundle(&self, top_n: usize) -> StatsBundle {
        let shown: Vec<ClusterId> = self.priority.iter().copied().take(top_n).collect();
        let mut visible = vec![false; self.k()];
        for &c in &shown {
            visible[c] = true;
        }
        let unique = self.membership.unique_words();
        let tokens = self.membership.cluster_tokens();
        let clusters = shown
            .iter()
            .map(|&c| ClusterSummary {
                cluster: c,
                glyph: c,
                unique_words: unique[c],
                tokens: tokens[c],
                membership_histogram: membership_histogram(&self.membership, c, |_| true),
                density: self.densities[c].y.clone(),
                span_counts: self.spans.row(c).to_vec(),
            })
            .collect();
        StatsBundle {
            schema_version: SCHEMA_VERSION,
            layer: self.layer,
            k: self.k(),
            max_span: self.config.max_span,
            max_spacing: self.config.max_spacing,
            bandwidth: self.config.bandwidth,
            histogram_bins: HISTOGRAM_BINS,
            density_x: grid(),
            priority: shown,
            clusters,
            cooccurrence: SparseTensor::from_dense(&self.cooccurrence, |c| visible[c]),
        }
    }
}
