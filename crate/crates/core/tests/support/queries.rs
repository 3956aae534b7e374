//! Query checks against brute-force recounts, shared with the acceptance
//! suite.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use embprobe_core::query::{Brush, CellSelection, MembershipBrush, QueryEngine, SpanBrush};
use embprobe_core::statistics::{LayerStats, StatsConfig, HISTOGRAM_BINS};

use super::oracles::{self, Corpus, Run};

pub const A: u32 = 0;
pub const B: u32 = 1;
pub const C: u32 = 2;

fn sentence(words: &[(&str, u32)]) -> Vec<(String, u32)> {
    words.iter().map(|&(w, l)| (w.to_string(), l)).collect()
}

pub fn hand_corpus() -> Corpus {
    vec![
        sentence(&[("the", A), ("big", A), ("dog", B), ("barks", C)]),
        sentence(&[("a", A), ("cat", B), ("sleeps", C)]),
        sentence(&[("the", A), ("dog", B), ("chased", C), ("the", A), ("cat", B)]),
        sentence(&[("dogs", B), ("bark", C)]),
        sentence(&[("the", A), ("old", A), ("big", A), ("cat", B), ("saw", C), ("a", A), ("dog", B)]),
        sentence(&[("run", C)]),
        sentence(&[("the", B), ("end", B)]),
        sentence(&[("big", A), ("dogs", B), ("run", C), ("fast", C)]),
        sentence(&[("a", A), ("cat", B), ("and", C), ("a", A), ("dog", B)]),
        sentence(&[("saw", C), ("the", A), ("cat", B)]),
    ]
}

pub fn stats(k: u32, c: &Corpus) -> LayerStats {
    LayerStats::compute(0, oracles::to_labeled(k, c), StatsConfig::default()).unwrap()
}

fn selected_words(c: &Corpus, k: u32, b: &MembershipBrush) -> BTreeSet<String> {
    oracles::percentages(c, k)
        .into_iter()
        .filter(|(_, p)| b.lo <= p[b.cluster] && p[b.cluster] <= b.hi)
        .map(|(w, _)| w)
        .collect()
}

/// Left-phrase predicate of a brush, over the oracle's representation.
fn keep_fn<'a>(
    c: &'a Corpus,
    k: u32,
    brush: Option<&Brush>,
    max_span: usize,
) -> Box<dyn Fn(usize, &Run) -> bool + 'a> {
    match brush {
        None => Box::new(|_, _| true),
        Some(Brush::Membership(b)) => {
            let words = selected_words(c, k, b);
            Box::new(move |si, &(_, a, e)| c[si][a..=e].iter().any(|(w, _)| words.contains(w)))
        }
        Some(&Brush::Span(b)) => {
            let hi = if b.hi == max_span { usize::MAX } else { b.hi };
            Box::new(move |_, &(l, a, e)| l as usize == b.cluster && (b.lo..=hi).contains(&(e - a + 1)))
        }
    }
}

fn brushes(k: u32, max_span: usize) -> Vec<Brush> {
    let mut out = Vec::new();
    for cluster in 0..k as usize {
        for (lo, hi) in [(1e-9, 1.0), (1.0, 1.0), (0.5, 1.0), (0.01, 0.5), (0.3, 0.7)] {
            out.push(Brush::Membership(MembershipBrush { cluster, lo, hi }));
        }
        for lo in 1..=max_span {
            for hi in lo..=max_span {
                if hi <= 3 || hi == max_span {
                    out.push(Brush::Span(SpanBrush { cluster, lo, hi }));
                }
            }
        }
    }
    out
}

/// Compares every query against brute-force recounts; panics on the first
/// difference.
pub fn check_queries(k: u32, c: &Corpus) {
    let s = stats(k, c);
    let q = QueryEngine::new(&s);
    let max_spacing = s.config.max_spacing;
    let max_span = s.config.max_span;
    let base = &s.cooccurrence;

    for brush in brushes(k, max_span) {
        let keep = keep_fn(c, k, Some(&brush), max_span);
        let expected = oracles::cooccurrence_where(c, max_spacing, &keep);
        match brush {
            Brush::Membership(b) => {
                let o = q.apply_membership_brush(b).unwrap();
                let words = selected_words(c, k, &b);
                assert_eq!(o.words.iter().cloned().collect::<BTreeSet<_>>(), words);
                let got: BTreeMap<_, _> = o
                    .cooccurrence
                    .nonzero()
                    .map(|(l, r, sp, n)| ((l as u32, r as u32, sp), n))
                    .collect();
                assert_eq!(got, expected, "membership brush {b:?}");
                let pct = oracles::percentages(c, k);
                for l in 0..k as usize {
                    let mut h = vec![0u32; HISTOGRAM_BINS];
                    for w in &words {
                        let p = pct[w][l];
                        if p > 0.0 {
                            h[((p * HISTOGRAM_BINS as f64).ceil() as usize).clamp(1, HISTOGRAM_BINS) - 1] += 1;
                        }
                    }
                    assert_eq!(o.histograms[l], h, "brush {b:?} cluster {l}");
                }
                assert!(o.cooccurrence.as_slice().iter().zip(base.as_slice()).all(|(o, b)| o <= b));
            }
            Brush::Span(b) => {
                let o = q.apply_span_brush(b).unwrap();
                for r in 0..k as usize {
                    for sp in 0..=max_spacing {
                        let want = *expected.get(&(b.cluster as u32, r as u32, sp)).unwrap_or(&0);
                        assert_eq!(o.cell(r)[sp], want, "span brush {b:?} cell ({r}, {sp})");
                        assert!(o.cell(r)[sp] <= base.get(b.cluster, r, sp));
                    }
                }
                // Only the brushed cluster's row can be nonzero.
                assert!(expected.keys().all(|&(l, _, _)| l as usize == b.cluster));
            }
        }
    }

    let mut all_brushes: Vec<Option<Brush>> = vec![None];
    all_brushes.extend(brushes(k, max_span).into_iter().step_by(3).map(Some));
    for brush in &all_brushes {
        let keep = keep_fn(c, k, brush.as_ref(), max_span);
        let tensor = oracles::cooccurrence_where(c, max_spacing, &keep);
        for l in 0..k {
            for r in 0..k {
                for sp in 0..=max_spacing {
                    let sel = CellSelection {
                        left: l as usize,
                        right: r as usize,
                        spacing: sp,
                        brush: *brush,
                    };
                    let page = q.select_cell(&sel, 0, usize::MAX).unwrap();
                    let expected = oracles::cell_hits(c, l, r, sp, &keep);
                    let got: Vec<(usize, Vec<[usize; 2]>)> = page
                        .hits
                        .iter()
                        .map(|h| (h.sentence_id as usize, h.pairs.clone()))
                        .collect();
                    assert_eq!(got, expected, "cell ({l}, {r}, {sp}) brush {brush:?}");
                    assert_eq!(page.total, expected.len());
                    let count = *tensor.get(&(l, r, sp)).unwrap_or(&0);
                    assert_eq!(page.total > 0, count > 0);
                    let pair_count: usize = expected.iter().map(|(_, p)| p.len()).sum();
                    assert_eq!(pair_count as u64, count);
                    for h in &page.hits {
                        let [a, b] = h.highlight;
                        assert_eq!(h.phrases[a].cluster, l as usize);
                        assert_eq!(h.phrases[b].cluster, r as usize);
                        assert_eq!(b - a - 1, sp);
                    }
                }
            }
        }
    }
}
