use super::LabeledCorpus;
use crate::ClusterId;

/// Occurrence counts of every word type in every cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipTable {
    k: usize,
    /// `num_types x k`, row-major.
    counts: Vec<u32>,
    totals: Vec<u32>,
}

impl MembershipTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_types(&self) -> usize {
        self.totals.len()
    }

    pub fn count(&self, word: u32, cluster: ClusterId) -> u32 {
        self.counts[word as usize * self.k + cluster]
    }

    pub fn counts(&self, word: u32) -> &[u32] {
        &self.counts[word as usize * self.k..(word as usize + 1) * self.k]
    }

    pub fn total(&self, word: u32) -> u32 {
        self.totals[word as usize]
    }

    /// Share of the word's occurrences that fall in `cluster`.
    pub fn percentage(&self, word: u32, cluster: ClusterId) -> f64 {
        match self.total(word) {
            0 => 0.0,
            t => self.count(word, cluster) as f64 / t as f64,
        }
    }

    /// `(word type, percentage)` for every type with a nonzero count in
    /// `cluster`.
    pub fn members(&self, cluster: ClusterId) -> impl Iterator<Item = (u32, f64)> + '_ {
        (0..self.num_types() as u32)
            .filter(move |&w| self.count(w, cluster) > 0)
            .map(move |w| (w, self.percentage(w, cluster)))
    }

    /// Number of distinct word types with a nonzero count in each cluster.
    pub fn unique_words(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for row in self.counts.chunks_exact(self.k) {
            for (o, &c) in out.iter_mut().zip(row) {
                *o += (c > 0) as usize;
            }
        }
        out
    }

    /// Tokens assigned to each cluster.
    pub fn cluster_tokens(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.k];
        for row in self.counts.chunks_exact(self.k) {
            for (o, &c) in out.iter_mut().zip(row) {
                *o += c as u64;
            }
        }
        out
    }
}

pub fn membership_percentages(corpus: &LabeledCorpus) -> MembershipTable {
    let k = corpus.k();
    let types = corpus.vocab().len();
    let mut counts = vec![0u32; types * k];
    let mut totals = vec![0u32; types];
    for s in corpus.sentences() {
        for (&w, &l) in s.words.iter().zip(&s.labels) {
            counts[w as usize * k + l as usize] += 1;
            totals[w as usize] += 1;
        }
    }
    MembershipTable { k, counts, totals }
}

/// Clusters by descending number of distinct member word types, ties by
/// ascending index.
pub fn cluster_priority(table: &MembershipTable) -> Vec<ClusterId> {
    let unique = table.unique_words();
    let mut order: Vec<ClusterId> = (0..table.k()).collect();
    order.sort_by(|&a, &b| unique[b].cmp(&unique[a]).then(a.cmp(&b)));
    order
}

/// Bin index in `0..bins` for a percentage in `(0, 1]`; bin `b` covers
/// `(b / bins, (b + 1) / bins]`.
pub fn quantize(p: f64, bins: usize) -> usize {
    ((p * bins as f64).ceil() as usize).clamp(1, bins) - 1
}
