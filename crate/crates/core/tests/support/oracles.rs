//! Brute-force reference implementations, written independently of the
//! library (string keys, ordered maps, direct nested loops) so that they
//! share no code path with what they check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use embprobe_core::clustering::SeedDraw;
use embprobe_core::LabeledCorpus;
use rand::Rng;

/// One `(word, label)` list per sentence.
pub type Corpus = Vec<Vec<(String, u32)>>;

/// `(label, first position, last position)` per phrase.
pub type Run = (u32, usize, usize);

pub fn random_corpus(rng: &mut impl Rng, k: u32, vocab: usize, max_tokens: usize) -> Corpus {
    let mut out = Vec::new();
    let mut budget = max_tokens;
    while budget > 0 {
        let n = rng.random_range(1..=budget.min(20));
        budget -= n;
        // Runs are more interesting when labels repeat, so half the time
        // copy the previous label.
        let mut sentence: Vec<(String, u32)> = Vec::with_capacity(n);
        for _ in 0..n {
            let label = match sentence.last() {
                Some(&(_, prev)) if rng.random_bool(0.5) => prev,
                _ => rng.random_range(0..k),
            };
            sentence.push((format!("t{}", rng.random_range(0..vocab)), label));
        }
        out.push(sentence);
        if rng.random_bool(0.1) {
            break;
        }
    }
    out
}

pub fn to_labeled(k: u32, c: &Corpus) -> LabeledCorpus {
    LabeledCorpus::from_words(
        k as usize,
        c.iter().enumerate().map(|(i, s)| {
            (
                i as u64,
                s.iter().map(|(w, _)| w.clone()).collect::<Vec<_>>(),
                s.iter().map(|&(_, l)| l).collect(),
            )
        }),
    )
    .expect("valid corpus")
}

pub fn num_tokens(c: &Corpus) -> usize {
    c.iter().map(Vec::len).sum()
}

pub fn membership_counts(c: &Corpus) -> BTreeMap<(String, u32), u64> {
    let mut m = BTreeMap::new();
    for s in c {
        for (w, l) in s {
            *m.entry((w.clone(), *l)).or_insert(0) += 1;
        }
    }
    m
}

/// p(w, l) = c(w, l) / sum over l' of c(w, l').
pub fn percentages(c: &Corpus, k: u32) -> BTreeMap<String, Vec<f64>> {
    let counts = membership_counts(c);
    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    for ((w, _), n) in &counts {
        *totals.entry(w.as_str()).or_insert(0) += n;
    }
    totals
        .iter()
        .map(|(w, &t)| {
            let row = (0..k)
                .map(|l| *counts.get(&(w.to_string(), l)).unwrap_or(&0) as f64 / t as f64)
                .collect();
            (w.to_string(), row)
        })
        .collect()
}

pub fn phrases(c: &Corpus) -> Vec<Vec<Run>> {
    c.iter()
        .map(|s| {
            let mut runs = Vec::new();
            let mut i = 0;
            while i < s.len() {
                let mut j = i;
                while j + 1 < s.len() && s[j + 1].1 == s[i].1 {
                    j += 1;
                }
                runs.push((s[i].1, i, j));
                i = j + 1;
            }
            runs
        })
        .collect()
}

/// `[cluster][len - 1]`, lengths at or beyond `max_span` in the last column.
pub fn span_histogram(c: &Corpus, k: u32, max_span: usize) -> Vec<Vec<u64>> {
    let mut h = vec![vec![0u64; max_span]; k as usize];
    for s in phrases(c) {
        for (l, a, b) in s {
            let len = b - a + 1;
            h[l as usize][len.min(max_span) - 1] += 1;
        }
    }
    h
}

/// Ordered phrase pairs `(left, right, spacing)` whose left phrase passes
/// `keep(sentence index, run)`.
pub fn cooccurrence_where(
    c: &Corpus,
    max_spacing: usize,
    keep: impl Fn(usize, &Run) -> bool,
) -> BTreeMap<(u32, u32, usize), u64> {
    let mut m = BTreeMap::new();
    for (si, runs) in phrases(c).iter().enumerate() {
        for a in 0..runs.len() {
            for b in a + 1..runs.len() {
                let spacing = b - a - 1;
                if spacing <= max_spacing && keep(si, &runs[a]) {
                    *m.entry((runs[a].0, runs[b].0, spacing)).or_insert(0) += 1;
                }
            }
        }
    }
    m
}

pub fn cooccurrence(c: &Corpus, max_spacing: usize) -> BTreeMap<(u32, u32, usize), u64> {
    cooccurrence_where(c, max_spacing, |_, _| true)
}

/// Clusters by descending number of distinct word types, then by index.
pub fn priority(c: &Corpus, k: u32) -> Vec<usize> {
    let mut types: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); k as usize];
    for s in c {
        for (w, l) in s {
            types[*l as usize].insert(w);
        }
    }
    let mut order: Vec<usize> = (0..k as usize).collect();
    order.sort_by(|&a, &b| types[b].len().cmp(&types[a].len()).then(a.cmp(&b)));
    order
}

/// Sentence indices holding a matching pair, with the matching phrase index
/// pairs.
pub fn cell_hits(
    c: &Corpus,
    left: u32,
    right: u32,
    spacing: usize,
    keep: impl Fn(usize, &Run) -> bool,
) -> Vec<(usize, Vec<[usize; 2]>)> {
    phrases(c)
        .iter()
        .enumerate()
        .filter_map(|(si, runs)| {
            let mut pairs = Vec::new();
            for a in 0..runs.len() {
                let b = a + spacing + 1;
                if b < runs.len() && runs[a].0 == left && runs[b].0 == right && keep(si, &runs[a]) {
                    pairs.push([a, b]);
                }
            }
            (!pairs.is_empty()).then_some((si, pairs))
        })
        .collect()
}

/// Nearest centroid by exhaustive f64 search, first index on ties.
pub fn nearest_brute(vectors: &[f32], centroids: &[f32], dim: usize) -> Vec<u32> {
    vectors
        .chunks(dim)
        .map(|v| {
            let mut best = (f64::INFINITY, 0u32);
            for (c, mu) in centroids.chunks(dim).enumerate() {
                let d: f64 = v
                    .iter()
                    .zip(mu)
                    .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
                    .sum();
                if d < best.0 {
                    best = (d, c as u32);
                }
            }
            best.1
        })
        .collect()
}

pub fn sse_brute(vectors: &[f32], centroids: &[f32], labels: &[u32], dim: usize) -> f64 {
    vectors
        .chunks(dim)
        .zip(labels)
        .map(|(v, &l)| {
            let mu = &centroids[l as usize * dim..(l as usize + 1) * dim];
            v.iter()
                .zip(mu)
                .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Reflected Gaussian KDE at `x`, before any renormalization: the density
/// of the samples plus their mirror images about 0 and 1.
pub fn kde_at(samples: &[f64], h: f64, x: f64) -> f64 {
    let phi = |u: f64| (-u * u / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = 0.0;
    for &p in samples {
        for mirror in [p, -p, 2.0 - p] {
            s += phi((x - mirror) / h);
        }
    }
    s / (samples.len() as f64 * h)
}

/// Drives seeding along a fixed prefix of choices, then always takes the
/// first admissible row, recording the admissible rows of every draw.
pub struct ScriptedDraw {
    pub prefix: Vec<usize>,
    pub taken: Vec<usize>,
    pub options: Vec<Vec<usize>>,
}

impl SeedDraw for ScriptedDraw {
    fn pick_weighted(&mut self, weights: &[f64]) -> usize {
        let admissible: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        let depth = self.taken.len();
        let pick = match self.prefix.get(depth) {
            Some(&p) => {
                assert!(admissible.contains(&p), "scripted choice {p} has zero weight");
                p
            }
            None => admissible[0],
        };
        self.taken.push(pick);
        self.options.push(admissible);
        pick
    }
}

/// Every complete sequence of seed rows the seeding can produce: a depth
/// first walk over all positive-weight choices of every draw.
pub fn enumerate_seedings(
    mut run: impl FnMut(&mut ScriptedDraw),
) -> Vec<Vec<usize>> {
    let mut leaves = Vec::new();
    let mut stack = vec![Vec::new()];
    while let Some(prefix) = stack.pop() {
        let mut draw = ScriptedDraw {
            prefix: prefix.clone(),
            taken: Vec::new(),
            options: Vec::new(),
        };
        run(&mut draw);
        for depth in prefix.len()..draw.taken.len() {
            for &alt in &draw.options[depth] {
                if alt != draw.taken[depth] {
                    let mut p = draw.taken[..depth].to_vec();
                    p.push(alt);
                    stack.push(p);
                }
            }
        }
        leaves.push(draw.taken);
    }
    leaves.sort();
    leaves
}
