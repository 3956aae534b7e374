mod support;

use proptest::collection::vec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use embprobe_core::statistics::{grid, kde_reflected, membership_percentages, membership_density, GRID_POINTS};
use support::oracles;

const STEP: f64 = 1.0 / GRID_POINTS as f64;

fn trapezoid(y: &[f64]) -> f64 {
    (1..y.len()).map(|i| (y[i - 1] + y[i]) * STEP / 2.0).sum()
}

fn local_maxima(y: &[f64]) -> Vec<usize> {
    (1..y.len() - 1)
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
        .collect()
}

proptest! {
    #[test]
    fn curve_is_the_rescaled_reflected_kde(samples in vec(0.001f64..=1.0, 1..40), h in 0.01f64..0.3) {
        let (y, raw) = kde_reflected(&samples, h).unwrap();
        let direct: Vec<f64> = grid().iter().map(|&x| oracles::kde_at(&samples, h, x)).collect();
        let direct_mass = trapezoid(&direct);
        prop_assert!((raw - direct_mass).abs() <= 1e-12 * direct_mass.max(1.0));
        for (a, b) in y.iter().zip(&direct) {
            prop_assert!((a - b / direct_mass).abs() <= 1e-9 * (b / direct_mass).max(1.0));
        }
        prop_assert!((trapezoid(&y) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn every_nonempty_cluster_integrates_to_one(seed in any::<u64>(), k in 1u32..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = oracles::random_corpus(&mut rng, k, 30, 500);
        let table = membership_percentages(&oracles::to_labeled(k, &c));
        for l in 0..k as usize {
            let d = membership_density(&table, l, 0.05).unwrap();
            if d.is_empty() {
                prop_assert!(d.y.iter().all(|&v| v == 0.0));
            } else {
                prop_assert!((d.mass() - 1.0).abs() <= 0.02, "cluster {} mass {}", l, d.mass());
                prop_assert!(d.y.iter().all(|&v| v >= 0.0));
            }
        }
    }
}

#[test]
fn two_mode_mixture_peaks_near_quarter_and_three_quarters() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut samples = Vec::new();
    for mean in [0.25, 0.75] {
        let n = Normal::<f64>::new(mean, 0.04).unwrap();
        samples.extend((0..500).map(|_| n.sample(&mut rng).clamp(1e-6, 1.0)));
    }
    let (y, raw) = kde_reflected(&samples, 0.05).unwrap();
    assert!((trapezoid(&y) - 1.0).abs() <= 0.02);
    assert!(raw > 0.98 && raw < 1.02, "raw mass {raw}");
    let x = grid();
    let peaks = local_maxima(&y);
    assert_eq!(peaks.len(), 2, "peaks at {:?}", peaks.iter().map(|&i| x[i]).collect::<Vec<_>>());
    assert!((x[peaks[0]] - 0.25).abs() <= STEP);
    assert!((x[peaks[1]] - 0.75).abs() <= STEP);
}

#[test]
fn mass_near_zero_is_kept_by_reflection() {
    // Without reflection at 0 half of each kernel would fall outside [0, 1].
    let (_, raw) = kde_reflected(&[0.02, 0.03, 0.05], 0.05).unwrap();
    let unreflected: f64 = {
        let phi = |u: f64| (-u * u / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let y: Vec<f64> = grid()
            .iter()
            .map(|&x| [0.02, 0.03, 0.05].iter().map(|&p| phi((x - p) / 0.05)).sum::<f64>() / (3.0 * 0.05))
            .collect();
        trapezoid(&y)
    };
    assert!(raw > unreflected);
}
