use rayon::prelude::*;

use super::{assign_with_distances, check_shapes, chunked_sum, ClusterError, CHUNK};

#[derive(Debug, Clone, PartialEq)]
pub struct LloydOutcome {
    pub centroids: Vec<f32>,
    pub labels: Vec<u32>,
    pub sse: f64,
    /// Update steps performed.
    pub iterations: usize,
    /// SSE after every assignment step, the last entry being `sse`.
    pub sse_history: Vec<f64>,
}

/// Standard Lloyd iteration from the given initial centroids.
///
/// Each step assigns every vector to its nearest centroid, then moves each
/// centroid to the mean of its members. Stops once no centroid moves by
/// `tol` or more (Euclidean), or after `max_iters` updates. A centroid that
/// loses all members is moved onto the vector farthest from its own
/// centroid (ties to the lower row), distinct vectors for distinct empty
/// clusters.
pub fn lloyd_fit(
    vectors: &[f32],
    dim: usize,
    initial: Vec<f32>,
    max_iters: usize,
    tol: f64,
) -> Result<LloydOutcome, ClusterError> {
    check_shapes(vectors, &initial, dim)?;
    let mut centroids = initial;
    let (mut labels, mut dists) = assign_with_distances(vectors, &centroids, dim);
    let mut sse_history = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iters {
        sse_history.push(chunked_sum(&dists));
        let updated = update_centroids(vectors, dim, &centroids, &labels, &dists);
        let shift = max_shift(&centroids, &updated, dim);
        centroids = updated;
        (labels, dists) = assign_with_distances(vectors, &centroids, dim);
        iterations += 1;
        if shift < tol {
            break;
        }
    }
    let sse = chunked_sum(&dists);
    sse_history.push(sse);
    Ok(LloydOutcome {
        centroids,
        labels,
        sse,
        iterations,
        sse_history,
    })
}

fn update_centroids(
    vectors: &[f32],
    dim: usize,
    centroids: &[f32],
    labels: &[u32],
    dists: &[f64],
) -> Vec<f32> {
    let k = centroids.len() / dim;
    let partials: Vec<(Vec<f64>, Vec<u64>)> = vectors
        .par_chunks(CHUNK * dim)
        .zip(labels.par_chunks(CHUNK))
        .map(|(block, block_labels)| {
            let mut sums = vec![0f64; k * dim];
            let mut counts = vec![0u64; k];
            for (v, &l) in block.chunks_exact(dim).zip(block_labels) {
                let l = l as usize;
                counts[l] += 1;
                for (s, x) in sums[l * dim..(l + 1) * dim].iter_mut().zip(v) {
                    *s += *x as f64;
                }
            }
            (sums, counts)
        })
        .collect();

    let mut sums = vec![0f64; k * dim];
    let mut counts = vec![0u64; k];
    for (s, c) in &partials {
        for (a, b) in sums.iter_mut().zip(s) {
            *a += b;
        }
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
    }

    let mut out = vec![0f32; k * dim];
    let empty: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
    for c in (0..k).filter(|&c| counts[c] > 0) {
        for (o, s) in out[c * dim..(c + 1) * dim].iter_mut().zip(&sums[c * dim..]) {
            *o = (*s / counts[c] as f64) as f32;
        }
    }
    if !empty.is_empty() {
        let mut order: Vec<usize> = (0..dists.len()).collect();
        order.sort_by(|&a, &b| dists[b].total_cmp(&dists[a]).then(a.cmp(&b)));
        for (&c, &row) in empty.iter().zip(&order) {
            tracing::debug!(cluster = c, row, "reseeding empty cluster");
            out[c * dim..(c + 1) * dim].copy_from_slice(&vectors[row * dim..(row + 1) * dim]);
        }
        // More empty clusters than vectors: keep the old centroids.
        for &c in empty.iter().skip(order.len()) {
            out[c * dim..(c + 1) * dim].copy_from_slice(&centroids[c * dim..(c + 1) * dim]);
        }
    }
    out
}

fn max_shift(old: &[f32], new: &[f32], dim: usize) -> f64 {
    old.chunks_exact(dim)
        .zip(new.chunks_exact(dim))
        .map(|(a, b)| super::sq_dist(a, b).sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_fit_converges_in_one_step() {
        let out = lloyd_fit(&[0.0, 1.0], 1, vec![0.0, 1.0], 300, 1e-4).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.sse, 0.0);
        assert_eq!(out.labels, vec![0, 1]);
    }

    #[test]
    fn two_pairs() {
        let out = lloyd_fit(&[0.0, 2.0, 10.0, 12.0], 1, vec![0.0, 10.0], 300, 1e-4).unwrap();
        assert_eq!(out.centroids, vec![1.0, 11.0]);
        assert_eq!(out.sse, 4.0);
        // Brute force over every 2-partition of the four points.
        let pts = [0.0f64, 2.0, 10.0, 12.0];
        let mut best = f64::MAX;
        for mask in 1u32..15 {
            let mut cost = 0.0;
            for side in [true, false] {
                let members: Vec<f64> = (0..4)
                    .filter(|i| (mask >> i & 1 == 1) == side)
                    .map(|i| pts[i])
                    .collect();
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                cost += members.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
            }
            best = best.min(cost);
        }
        assert_eq!(out.sse, best);
    }

    #[test]
    fn sse_never_increases() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = 4;
            let v: Vec<f32> = (0..500 * dim).map(|_| rng.random_range(-5.0..5.0)).collect();
            let init = v[..8 * dim].to_vec();
            let out = lloyd_fit(&v, dim, init, 100, 0.0).unwrap();
            for w in out.sse_history.windows(2) {
                assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn empty_cluster_is_reseeded_at_farthest_point() {
        // Centroid 1 starts far from everything and captures nothing.
        let v = [0.0, 1.0, 2.0, 20.0];
        let out = update_centroids(&v, 1, &[1.0, 100.0], &[0, 0, 0, 0], &[1.0, 0.0, 1.0, 361.0]);
        assert_eq!(out, vec![5.75, 20.0]);
        let fit = lloyd_fit(&v, 1, vec![1.0, 100.0], 300, 1e-4).unwrap();
        assert_eq!(fit.centroids, vec![1.0, 20.0]);
        assert_eq!(fit.sse, 2.0);
    }

    #[test]
    fn zero_iterations_just_assigns() {
        let out = lloyd_fit(&[0.0, 3.0], 1, vec![1.0], 0, 1e-4).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.sse, 5.0);
        assert_eq!(out.centroids, vec![1.0]);
    }
}
