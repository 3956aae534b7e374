use serde::{Deserialize, Serialize};

use super::LabeledCorpus;
use crate::ClusterId;

/// Maximal run of same-cluster words in one sentence; `end` is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phrase {
    pub sentence_id: u64,
    pub cluster: u32,
    pub start: u32,
    pub end: u32,
}

impl Phrase {
    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Run-length decomposition of a label sequence: `(label, start, end)`.
pub fn runs(labels: &[u32]) -> Vec<(u32, usize, usize)> {
    let mut out: Vec<(u32, usize, usize)> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        match out.last_mut() {
            Some(run) if run.0 == l => run.2 = i,
            _ => out.push((l, i, i)),
        }
    }
    out
}

/// Phrases of every sentence, stored flat; `offsets[i]..offsets[i + 1]`
/// are the phrases of the corpus's `i`-th sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseIndex {
    phrases: Vec<Phrase>,
    offsets: Vec<usize>,
}

impl PhraseIndex {
    pub fn num_sentences(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn sentence(&self, i: usize) -> &[Phrase] {
        &self.phrases[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn iter_sentences(&self) -> impl Iterator<Item = &[Phrase]> {
        self.offsets.windows(2).map(|w| &self.phrases[w[0]..w[1]])
    }

    pub fn all(&self) -> &[Phrase] {
        &self.phrases
    }
}

pub fn extract_phrases(corpus: &LabeledCorpus) -> PhraseIndex {
    let mut phrases = Vec::with_capacity(corpus.num_tokens());
    let mut offsets = Vec::with_capacity(corpus.sentences().len() + 1);
    offsets.push(0);
    for s in corpus.sentences() {
        phrases.extend(runs(&s.labels).into_iter().map(|(cluster, start, end)| Phrase {
            sentence_id: s.id,
            cluster,
            start: start as u32,
            end: end as u32,
        }));
        offsets.push(phrases.len());
    }
    PhraseIndex { phrases, offsets }
}

/// Phrase counts per cluster and length. Column `max_span - 1` also holds
/// every longer phrase; `tail_tokens` keeps the exact token count of that
/// column so word mass is still recoverable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanHistogram {
    pub k: usize,
    pub max_span: usize,
    /// `k x max_span`, row-major; column `j` is span length `j + 1`.
    counts: Vec<u64>,
    tail_tokens: Vec<u64>,
}

impl SpanHistogram {
    pub fn new(k: usize, max_span: usize) -> Self {
        Self {
            k,
            max_span,
            counts: vec![0; k * max_span],
            tail_tokens: vec![0; k],
        }
    }

    pub fn add(&mut self, cluster: ClusterId, len: usize) {
        let col = len.min(self.max_span) - 1;
        self.counts[cluster * self.max_span + col] += 1;
        if len >= self.max_span {
            self.tail_tokens[cluster] += len as u64;
        }
    }

    /// Count for span length `len`; `len >= max_span` reads the final bucket.
    pub fn count(&self, cluster: ClusterId, len: usize) -> u64 {
        self.counts[cluster * self.max_span + len.clamp(1, self.max_span) - 1]
    }

    pub fn row(&self, cluster: ClusterId) -> &[u64] {
        &self.counts[cluster * self.max_span..(cluster + 1) * self.max_span]
    }

    /// Total words covered by the counted phrases.
    pub fn token_mass(&self) -> u64 {
        (0..self.k)
            .map(|c| {
                let exact: u64 = self.row(c)[..self.max_span - 1]
                    .iter()
                    .enumerate()
                    .map(|(j, &n)| (j as u64 + 1) * n)
                    .sum();
                exact + self.tail_tokens[c]
            })
            .sum()
    }
}

pub fn span_histogram(phrases: &PhraseIndex, k: usize, max_span: usize) -> SpanHistogram {
    let mut h = SpanHistogram::new(k, max_span);
    for p in phrases.all() {
        h.add(p.cluster as usize, p.len());
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(seqs: &[&[u32]], k: usize) -> LabeledCorpus {
        LabeledCorpus::from_words(
            k,
            seqs.iter()
                .enumerate()
                .map(|(i, s)| (i as u64, vec!["w"; s.len()], s.to_vec())),
        )
        .unwrap()
    }

    #[test]
    fn run_length_example() {
        let idx = extract_phrases(&corpus(&[&[1, 1, 2, 1]], 3));
        let got: Vec<(u32, usize)> = idx.sentence(0).iter().map(|p| (p.cluster, p.len())).collect();
        assert_eq!(got, vec![(1, 2), (2, 1), (1, 1)]);
        let h = span_histogram(&idx, 3, 10);
        assert_eq!(h.row(1)[..2], [1, 1]);
        assert_eq!(h.row(2)[..2], [1, 0]);
        assert_eq!(h.token_mass(), 4);
    }

    #[test]
    fn uniform_sentence_is_one_phrase() {
        let idx = extract_phrases(&corpus(&[&[4; 5]], 5));
        assert_eq!(idx.sentence(0).len(), 1);
        assert_eq!((idx.sentence(0)[0].start, idx.sentence(0)[0].end), (0, 4));
    }

    #[test]
    fn long_spans_fold_into_last_bucket() {
        let idx = extract_phrases(&corpus(&[&[0; 7], &[0; 3], &[0, 1]], 2));
        let h = span_histogram(&idx, 2, 3);
        assert_eq!(h.row(0), &[1, 0, 2]);
        assert_eq!(h.count(0, 7), 2);
        assert_eq!(h.token_mass(), 12);
    }

    #[test]
    fn empty_corpus() {
        let idx = extract_phrases(&corpus(&[], 2));
        assert_eq!(idx.num_sentences(), 0);
        let h = span_histogram(&idx, 2, 10);
        assert!(h.row(0).iter().chain(h.row(1)).all(|&c| c == 0));
        assert_eq!(h.token_mass(), 0);
    }
}
