use rand::Rng;
use rayon::prelude::*;

use super::{sq_dist, ClusterError};

/// Source of the random choices made during seeding. Abstracted so tests
/// can drive every branch of the sampling tree.
pub trait SeedDraw {
    /// Returns an index `i` with probability `weights[i] / sum(weights)`.
    /// Callers guarantee at least one positive weight.
    fn pick_weighted(&mut self, weights: &[f64]) -> usize;
}

pub struct RngDraw<R>(pub R);

impl<R: Rng> SeedDraw for RngDraw<R> {
    fn pick_weighted(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let target = self.0.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last_positive = i;
                if acc > target {
                    return i;
                }
            }
        }
        last_positive
    }
}

/// k-means++ seeding where every seed must come from a different word type.
///
/// `word_types[i]` is the type id of row `i`. The first seed is uniform over
/// all rows. Each later seed is drawn with probability proportional to the
/// squared distance to the nearest chosen seed, over rows whose type has
/// not been chosen yet; if all those rows sit exactly on a seed the draw is
/// uniform over them.
pub fn seed_unique_words(
    vectors: &[f32],
    dim: usize,
    word_types: &[u32],
    k: usize,
    draw: &mut dyn SeedDraw,
) -> Result<Vec<f32>, ClusterError> {
    let n = word_types.len();
    if dim == 0 || vectors.len() != n * dim {
        return Err(ClusterError::DimMismatch(format!(
            "{} values for {n} rows of dim {dim}",
            vectors.len()
        )));
    }
    let num_types = word_types.iter().map(|&t| t as usize + 1).max().unwrap_or(0);
    let mut present = vec![false; num_types];
    for &t in word_types {
        present[t as usize] = true;
    }
    let distinct = present.iter().filter(|&&p| p).count();
    if distinct < k {
        return Err(ClusterError::TooFewWordTypes { types: distinct, k });
    }

    let row = |i: usize| &vectors[i * dim..(i + 1) * dim];
    let mut centroids = Vec::with_capacity(k * dim);
    let mut used = vec![false; num_types];

    let first = draw.pick_weighted(&vec![1.0; n]);
    centroids.extend_from_slice(row(first));
    used[word_types[first] as usize] = true;
    let mut nearest: Vec<f64> = vectors
        .par_chunks(dim)
        .map(|v| sq_dist(v, row(first)))
        .collect();

    let mut weights = vec![0.0; n];
    for _ in 1..k {
        for (i, w) in weights.iter_mut().enumerate() {
            *w = if used[word_types[i] as usize] { 0.0 } else { nearest[i] };
        }
        if !weights.iter().any(|&w| w > 0.0) {
            for (i, w) in weights.iter_mut().enumerate() {
                *w = if used[word_types[i] as usize] { 0.0 } else { 1.0 };
            }
        }
        let next = draw.pick_weighted(&weights);
        debug_assert!(!used[word_types[next] as usize]);
        let seed = row(next);
        centroids.extend_from_slice(seed);
        used[word_types[next] as usize] = true;
        nearest
            .par_iter_mut()
            .zip(vectors.par_chunks(dim))
            .for_each(|(d, v)| *d = d.min(sq_dist(v, seed)));
    }
    Ok(centroids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_word_type_cannot_seed_two() {
        let v = [0.0, 1.0, 2.0];
        let err = seed_unique_words(&v, 1, &[0, 0, 0], 2, &mut RngDraw(ChaCha8Rng::seed_from_u64(0)));
        assert_eq!(err.unwrap_err(), ClusterError::TooFewWordTypes { types: 1, k: 2 });
    }

    #[test]
    fn k_one_is_a_single_uniform_draw() {
        struct Fixed(usize, usize);
        impl SeedDraw for Fixed {
            fn pick_weighted(&mut self, w: &[f64]) -> usize {
                self.1 += 1;
                assert!(w.iter().all(|&x| x == 1.0));
                self.0
            }
        }
        let v = [5.0, 6.0, 7.0];
        let mut d = Fixed(2, 0);
        assert_eq!(seed_unique_words(&v, 1, &[0, 0, 1], 1, &mut d).unwrap(), vec![7.0]);
        assert_eq!(d.1, 1);
    }

    #[test]
    fn weighted_pick_respects_zero_weights() {
        let mut d = RngDraw(ChaCha8Rng::seed_from_u64(4));
        for _ in 0..1000 {
            let i = d.pick_weighted(&[0.0, 3.0, 0.0, 1.0, 0.0]);
            assert!(i == 1 || i == 3);
        }
    }

    #[test]
    fn coincident_rows_fall_back_to_uniform() {
        // Two types share one location; after seeding type 0 every remaining
        // candidate has zero distance.
        let v = [1.0, 1.0, 1.0];
        let mut d = RngDraw(ChaCha8Rng::seed_from_u64(1));
        let c = seed_unique_words(&v, 1, &[0, 1, 0], 2, &mut d).unwrap();
        assert_eq!(c, vec![1.0, 1.0]);
    }
}
