use serde::{Deserialize, Serialize};

use super::{Phrase, PhraseIndex};
use crate::ClusterId;

/// Counts of ordered phrase pairs `(left, right)` in the same sentence by
/// spacing, the number of phrases strictly between them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceTensor {
    pub k: usize,
    pub max_spacing: usize,
    counts: Vec<u64>,
}

impl CooccurrenceTensor {
    pub fn new(k: usize, max_spacing: usize) -> Self {
        Self {
            k,
            max_spacing,
            counts: vec![0; k * k * (max_spacing + 1)],
        }
    }

    fn idx(&self, left: ClusterId, right: ClusterId, spacing: usize) -> usize {
        (left * self.k + right) * (self.max_spacing + 1) + spacing
    }

    pub fn get(&self, left: ClusterId, right: ClusterId, spacing: usize) -> u64 {
        self.counts[self.idx(left, right, spacing)]
    }

    pub fn increment(&mut self, left: ClusterId, right: ClusterId, spacing: usize) {
        let i = self.idx(left, right, spacing);
        self.counts[i] += 1;
    }

    /// Counts over spacings for one cell.
    pub fn cell(&self, left: ClusterId, right: ClusterId) -> &[u64] {
        let i = self.idx(left, right, 0);
        &self.counts[i..i + self.max_spacing + 1]
    }

    /// Counts for one left cluster: `k x (max_spacing + 1)`.
    pub fn row(&self, left: ClusterId) -> &[u64] {
        let w = self.k * (self.max_spacing + 1);
        &self.counts[left * w..(left + 1) * w]
    }

    /// Nonzero entries as `(left, right, spacing, count)`.
    pub fn nonzero(&self) -> impl Iterator<Item = (ClusterId, ClusterId, usize, u64)> + '_ {
        let s = self.max_spacing + 1;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| (i / (s * self.k), (i / s) % self.k, i % s, c))
    }

    pub fn total_at_spacing(&self, spacing: usize) -> u64 {
        self.counts
            .iter()
            .skip(spacing)
            .step_by(self.max_spacing + 1)
            .sum()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }
}

/// Counts every ordered phrase pair `a < b` of each sentence whose spacing
/// `b - a - 1` is at most `max_spacing`.
pub fn cooccurrence_tensor(phrases: &PhraseIndex, k: usize, max_spacing: usize) -> CooccurrenceTensor {
    cooccurrence_filtered(phrases, k, max_spacing, |_, _| true)
}

/// Like [`cooccurrence_tensor`] but only pairs whose left phrase passes
/// `keep_left(sentence index, phrase)`. The right phrase is never filtered.
pub fn cooccurrence_filtered(
    phrases: &PhraseIndex,
    k: usize,
    max_spacing: usize,
    keep_left: impl Fn(usize, &Phrase) -> bool,
) -> CooccurrenceTensor {
    let mut t = CooccurrenceTensor::new(k, max_spacing);
    for (i, sentence) in phrases.iter_sentences().enumerate() {
        for (a, left) in sentence.iter().enumerate() {
            if !keep_left(i, left) {
                continue;
            }
            for (spacing, right) in sentence[a + 1..].iter().take(max_spacing + 1).enumerate() {
                t.increment(left.cluster as usize, right.cluster as usize, spacing);
            }
        }
    }
    t
}
