//! k-means over one layer's word vectors.
//!
//! Seeding follows k-means++ with one restriction: once a vector has been
//! chosen as a seed, no other vector with the same surface form can be
//! chosen. Several seeded Lloyd runs are made and the one with the lowest
//! sum of squared distances (SSE) wins.
//!
//! All reductions run over fixed-size chunks in a fixed order, so results
//! are bitwise identical regardless of the rayon thread count.

mod lloyd;
mod model_file;
mod seeding;

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding_store::EmbeddingSet;

pub use lloyd::{lloyd_fit, LloydOutcome};
pub use model_file::{
    read_model, read_model_file, write_model, write_model_file, ModelFileError, MODEL_MAGIC,
    MODEL_VERSION,
};
pub use seeding::{seed_unique_words, RngDraw, SeedDraw};

/// Vectors per reduction chunk. Part of the determinism contract: changing
/// it changes floating-point summation order.
pub(crate) const CHUNK: usize = 1024;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("only {types} distinct word types for k = {k}; use k <= {types}")]
    TooFewWordTypes { types: usize, k: usize },
    #[error("k must be between 1 and 65535, got {0}")]
    InvalidK(usize),
    #[error("restarts must be at least 1")]
    NoRestarts,
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("centroid {0} is not finite")]
    NonFiniteCentroid(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iters: usize,
    /// Convergence threshold on the largest centroid displacement.
    pub tol: f64,
    pub rng_seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 50,
            restarts: 5,
            max_iters: 300,
            tol: 1e-4,
            rng_seed: 0,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.k == 0 || self.k > u16::MAX as usize {
            return Err(ClusterError::InvalidK(self.k));
        }
        if self.restarts == 0 {
            return Err(ClusterError::NoRestarts);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub layer: u32,
    pub k: usize,
    pub dim: usize,
    /// `k x dim`, row-major.
    pub centroids: Vec<f32>,
    pub sse: f64,
    pub restart_index: usize,
    pub rng_seed: u64,
    pub iterations: usize,
}

impl ClusterModel {
    pub fn centroid(&self, c: usize) -> &[f32] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    pub fn assign(&self, set: &EmbeddingSet) -> Result<AssignmentTable, ClusterError> {
        if set.dim() != self.dim {
            return Err(ClusterError::DimMismatch(format!(
                "model dim {} vs embedding dim {}",
                self.dim,
                set.dim()
            )));
        }
        let labels = assign(set.vectors(), &self.centroids, self.dim)?;
        Ok(AssignmentTable { k: self.k, labels })
    }
}

/// One cluster label (0-based) per embedding record, in record order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentTable {
    pub k: usize,
    pub labels: Vec<u32>,
}

impl AssignmentTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: ClusterModel,
    pub assignments: AssignmentTable,
    /// Final SSE of every restart, in restart order.
    pub restart_sse: Vec<f64>,
}

/// Squared Euclidean distance accumulated in f64.
#[inline]
pub(crate) fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum()
}

/// Nearest centroid and its squared distance; ties go to the lower index.
#[inline]
pub(crate) fn nearest(v: &[f32], centroids: &[f32], dim: usize) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(v, centroid);
        if d < best.1 {
            best = (c as u32, d);
        }
    }
    best
}

fn check_shapes(vectors: &[f32], centroids: &[f32], dim: usize) -> Result<(), ClusterError> {
    if dim == 0 || vectors.len() % dim != 0 || centroids.len() % dim != 0 || centroids.is_empty() {
        return Err(ClusterError::DimMismatch(format!(
            "{} vector values and {} centroid values do not split into rows of {dim}",
            vectors.len(),
            centroids.len()
        )));
    }
    if let Some(c) = centroids
        .chunks_exact(dim)
        .position(|row| row.iter().any(|x| !x.is_finite()))
    {
        return Err(ClusterError::NonFiniteCentroid(c));
    }
    Ok(())
}

/// Labels and squared distances of every vector to its nearest centroid.
pub(crate) fn assign_with_distances(
    vectors: &[f32],
    centroids: &[f32],
    dim: usize,
) -> (Vec<u32>, Vec<f64>) {
    let pairs: Vec<(u32, f64)> = vectors
        .par_chunks(dim)
        .map(|v| nearest(v, centroids, dim))
        .collect();
    pairs.into_iter().unzip()
}

/// Sum in fixed chunk order.
pub(crate) fn chunked_sum(values: &[f64]) -> f64 {
    let partials: Vec<f64> = values
        .par_chunks(CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect();
    partials.iter().sum()
}

/// Nearest-centroid label per row of `vectors`.
pub fn assign(vectors: &[f32], centroids: &[f32], dim: usize) -> Result<Vec<u32>, ClusterError> {
    check_shapes(vectors, centroids, dim)?;
    Ok(assign_with_distances(vectors, centroids, dim).0)
}

/// SSE of the given labelling, recomputed from scratch.
pub fn sse_of(vectors: &[f32], centroids: &[f32], labels: &[u32], dim: usize) -> f64 {
    let d: Vec<f64> = vectors
        .par_chunks(dim)
        .zip(labels.par_iter())
        .map(|(v, &l)| sq_dist(v, &centroids[l as usize * dim..(l as usize + 1) * dim]))
        .collect();
    chunked_sum(&d)
}

/// Seed for restart `index`: a SplitMix64 finalizer applied to
/// `seed + (index + 1) * 0x9E3779B97F4A7C15`.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Interns surface forms to dense word-type ids in first-seen order.
pub fn word_type_ids<'a>(surfaces: impl Iterator<Item = &'a str>) -> Vec<u32> {
    let mut ids: HashMap<&str, u32> = HashMap::new();
    surfaces
        .map(|s| {
            let next = ids.len() as u32;
            *ids.entry(s).or_insert(next)
        })
        .collect()
}

/// Runs `config.restarts` seeded Lloyd fits and keeps the lowest SSE
/// (earliest restart on ties).
pub fn fit_best_of(set: &EmbeddingSet, config: &KMeansConfig) -> Result<FitOutcome, ClusterError> {
    config.validate()?;
    let types = word_type_ids(set.surfaces());
    let mut best: Option<(usize, LloydOutcome)> = None;
    let mut restart_sse = Vec::with_capacity(config.restarts);
    for restart in 0..config.restarts {
        let mut draw = RngDraw(ChaCha8Rng::seed_from_u64(sub_seed(config.rng_seed, restart as u64)));
        let seeds = seed_unique_words(set.vectors(), set.dim(), &types, config.k, &mut draw)?;
        let run = lloyd_fit(set.vectors(), set.dim(), seeds, config.max_iters, config.tol)?;
        tracing::debug!(restart, sse = run.sse, iterations = run.iterations, "k-means restart");
        restart_sse.push(run.sse);
        if best.as_ref().is_none_or(|(_, b)| run.sse < b.sse) {
            best = Some((restart, run));
        }
    }
    let (restart_index, run) = best.expect("at least one restart");
    Ok(FitOutcome {
        model: ClusterModel {
            layer: set.layer(),
            k: config.k,
            dim: set.dim(),
            centroids: run.centroids,
            sse: run.sse,
            restart_index,
            rng_seed: config.rng_seed,
            iterations: run.iterations,
        },
        assignments: AssignmentTable {
            k: config.k,
            labels: run.labels,
        },
        restart_sse,
    })
}
