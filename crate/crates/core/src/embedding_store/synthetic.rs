//! Gaussian-mixture stand-in for extracted embeddings, with known ground
//! truth so that clustering and statistics can be tested end to end.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{EmbeddingSet, ValidationError};
use crate::clustering::sub_seed;
use crate::corpus::{Sentence, WordRef};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    pub num_sentences: usize,
    pub words_per_sentence: usize,
    pub dim: usize,
    pub num_modes: usize,
    /// Pseudo-layers are numbered `1..=layers`.
    pub layers: u32,
    /// Distinct word types; `None` picks `max(8 * num_modes, 32)`.
    pub vocab_size: Option<usize>,
    /// Euclidean distance between any two mode means.
    pub separation: f32,
    pub stddev: f32,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            num_sentences: 100,
            words_per_sentence: 10,
            dim: 16,
            num_modes: 4,
            layers: 1,
            vocab_size: None,
            separation: 10.0,
            stddev: 1.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub sentences: Vec<Sentence>,
    pub layers: Vec<EmbeddingSet>,
    /// Per layer, the mixture mode each record was drawn from.
    pub modes: Vec<Vec<usize>>,
    /// Per layer, `num_modes x dim` row-major mode means.
    pub mode_means: Vec<Vec<f32>>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SyntheticError {
    #[error("synthetic parameter `{0}` must be positive")]
    NonPositive(&'static str),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

impl SyntheticParams {
    pub fn vocab(&self) -> usize {
        self.vocab_size.unwrap_or((8 * self.num_modes).max(32))
    }

    fn validate(&self) -> Result<(), SyntheticError> {
        let checks = [
            ("num_sentences", self.num_sentences > 0),
            ("words_per_sentence", self.words_per_sentence > 0),
            ("dim", self.dim > 0),
            ("num_modes", self.num_modes > 0),
            ("layers", self.layers > 0),
            ("vocab_size", self.vocab() > 0),
            ("separation", self.separation > 0.0 && self.separation.is_finite()),
            ("stddev", self.stddev > 0.0 && self.stddev.is_finite()),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(SyntheticError::NonPositive(name)),
            None => Ok(()),
        }
    }
}

/// Mode means for one layer: a scaled, signed axis permutation when there
/// are no more modes than dimensions (all pairwise distances equal
/// `separation`), random directions on a sphere otherwise.
fn mode_means(p: &SyntheticParams, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let mut means = vec![0f32; p.num_modes * p.dim];
    if p.num_modes == 1 {
        return means;
    }
    if p.num_modes <= p.dim {
        let scale = p.separation / std::f32::consts::SQRT_2;
        let mut axes: Vec<usize> = (0..p.dim).collect();
        axes.shuffle(rng);
        for (m, &axis) in axes.iter().take(p.num_modes).enumerate() {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            means[m * p.dim + axis] = sign * scale;
        }
    } else {
        for row in means.chunks_exact_mut(p.dim) {
            let v: Vec<f32> = (0..p.dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt().max(f32::EPSILON);
            for (r, x) in row.iter_mut().zip(v) {
                *r = x / norm * p.separation;
            }
        }
    }
    means
}

/// Deterministic given `params.seed`. Each word type is tied to one mode,
/// or to two modes (picked with equal odds per token) for roughly a third
/// of the types; the ties are redrawn for every pseudo-layer.
pub fn generate_synthetic(params: &SyntheticParams) -> Result<SyntheticCorpus, SyntheticError> {
    params.validate()?;
    let vocab: Vec<String> = (0..params.vocab()).map(|i| format!("w{i}")).collect();

    let mut corpus_rng = ChaCha8Rng::seed_from_u64(sub_seed(params.seed, 0));
    let sentences: Vec<Sentence> = (0..params.num_sentences)
        .map(|id| {
            let words: Vec<String> = (0..params.words_per_sentence)
                .map(|_| vocab[corpus_rng.random_range(0..vocab.len())].clone())
                .collect();
            Sentence {
                id: id as u64,
                raw_text: words.join(" "),
                words,
            }
        })
        .collect();
    let type_of: std::collections::HashMap<&str, usize> =
        vocab.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();

    let mut out = SyntheticCorpus {
        sentences: Vec::new(),
        layers: Vec::new(),
        modes: Vec::new(),
        mode_means: Vec::new(),
    };
    for layer in 1..=params.layers {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(params.seed, layer as u64));
        let means = mode_means(params, &mut rng);
        let ties: Vec<(usize, Option<usize>)> = (0..vocab.len())
            .map(|_| {
                let primary = rng.random_range(0..params.num_modes);
                let secondary = (params.num_modes > 1 && rng.random_bool(1.0 / 3.0))
                    .then(|| (primary + 1) % params.num_modes);
                (primary, secondary)
            })
            .collect();

        let mut set = EmbeddingSet::new(layer, params.dim)?;
        let mut modes = Vec::with_capacity(params.num_sentences * params.words_per_sentence);
        let mut v = vec![0f32; params.dim];
        for s in &sentences {
            for (pos, w) in s.words.iter().enumerate() {
                let (primary, secondary) = ties[type_of[w.as_str()]];
                let mode = match secondary {
                    Some(alt) if rng.random_bool(0.5) => alt,
                    _ => primary,
                };
                let mean = &means[mode * params.dim..(mode + 1) * params.dim];
                for (x, m) in v.iter_mut().zip(mean) {
                    let z: f32 = rng.sample(StandardNormal);
                    *x = m + params.stddev * z;
                }
                let word = WordRef {
                    sentence_id: s.id,
                    position: pos as u32,
                };
                set.push(word, w.clone(), &v)?;
                modes.push(mode);
            }
        }
        out.layers.push(set);
        out.modes.push(modes);
        out.mode_means.push(means);
    }
    out.sentences = sentences;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding_store::write_embeddings;

    #[test]
    fn same_seed_same_bytes() {
        let p = SyntheticParams {
            layers: 2,
            ..Default::default()
        };
        let a = generate_synthetic(&p).unwrap();
        let b = generate_synthetic(&p).unwrap();
        for (x, y) in a.layers.iter().zip(&b.layers) {
            let (mut bx, mut by) = (Vec::new(), Vec::new());
            write_embeddings(x, &mut bx).unwrap();
            write_embeddings(y, &mut by).unwrap();
            assert_eq!(bx, by);
        }
        assert_eq!(a.sentences, b.sentences);
        let c = generate_synthetic(&SyntheticParams { seed: 8, ..p }).unwrap();
        assert_ne!(a.layers[0].vectors(), c.layers[0].vectors());
    }

    #[test]
    fn modes_are_equidistant() {
        let p = SyntheticParams {
            num_modes: 5,
            separation: 12.0,
            ..Default::default()
        };
        let s = generate_synthetic(&p).unwrap();
        let means = &s.mode_means[0];
        for i in 0..5 {
            for j in i + 1..5 {
                let d: f32 = (0..p.dim)
                    .map(|c| (means[i * p.dim + c] - means[j * p.dim + c]).powi(2))
                    .sum::<f32>()
                    .sqrt();
                assert!((d - 12.0).abs() < 1e-4, "{d}");
            }
        }
    }

    #[test]
    fn shape_and_validation() {
        let p = SyntheticParams {
            num_sentences: 7,
            words_per_sentence: 3,
            ..Default::default()
        };
        let s = generate_synthetic(&p).unwrap();
        assert_eq!(s.layers[0].len(), 21);
        s.layers[0].check_against_manifest(&s.sentences).unwrap();
        assert_eq!(
            generate_synthetic(&SyntheticParams { dim: 0, ..p }).unwrap_err(),
            SyntheticError::NonPositive("dim")
        );
    }
}
