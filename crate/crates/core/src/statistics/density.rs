use serde::{Deserialize, Serialize};

use super::{MembershipTable, StatsError};
use crate::ClusterId;

pub const GRID_POINTS: usize = 128;

/// Evaluation points `x_j = (j + 1) / GRID_POINTS`, uniform over `(0, 1]`.
pub fn grid() -> Vec<f64> {
    (1..=GRID_POINTS).map(|j| j as f64 / GRID_POINTS as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub cluster: ClusterId,
    /// Density at each point of [`grid`].
    pub y: Vec<f64>,
    pub bandwidth: f64,
    /// Word types contributing one sample each.
    pub words: usize,
    /// Trapezoid mass of the reflected estimate on the grid before it was
    /// rescaled to 1. Falls short of 1 only when samples sit within a few
    /// bandwidths of 0, where part of the mass lies left of the first grid
    /// point.
    pub raw_mass: f64,
}

impl DensityCurve {
    pub fn is_empty(&self) -> bool {
        self.words == 0
    }

    /// Trapezoid integral over the grid.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.y)
    }
}

fn trapezoid(y: &[f64]) -> f64 {
    let step = 1.0 / GRID_POINTS as f64;
    y.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum()
}

fn gaussian(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gaussian KDE over samples in `(0, 1]`, reflected at 0 and 1 so the
/// estimate keeps its mass inside the unit interval, then rescaled so the
/// grid trapezoid integrates to 1.
pub fn kde_reflected(samples: &[f64], bandwidth: f64) -> Result<(Vec<f64>, f64), StatsError> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(StatsError::BadBandwidth(bandwidth));
    }
    if samples.is_empty() {
        return Ok((vec![0.0; GRID_POINTS], 0.0));
    }
    let norm = 1.0 / (samples.len() as f64 * bandwidth);
    let mut y: Vec<f64> = grid()
        .into_iter()
        .map(|x| {
            samples
                .iter()
                .map(|&p| {
                    gaussian((x - p) / bandwidth)
                        + gaussian((x + p) / bandwidth)
                        + gaussian((x - (2.0 - p)) / bandwidth)
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    let raw = trapezoid(&y);
    if raw > 0.0 {
        y.iter_mut().for_each(|v| *v /= raw);
    }
    Ok((y, raw))
}

/// Density of the nonzero membership percentages of `cluster`, one sample
/// per word type.
pub fn membership_density(
    table: &MembershipTable,
    cluster: ClusterId,
    bandwidth: f64,
) -> Result<DensityCurve, StatsError> {
    let samples: Vec<f64> = table.members(cluster).map(|(_, p)| p).collect();
    let (y, raw_mass) = kde_reflected(&samples, bandwidth)?;
    Ok(DensityCurve {
        cluster,
        y,
        bandwidth,
        words: samples.len(),
        raw_mass,
    })
}
