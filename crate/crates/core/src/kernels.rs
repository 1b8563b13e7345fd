//! Positive-definite RBF kernel, its gradient, and the median-heuristic
//! bandwidth rule used by the Stein machinery.

use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::particles::{sq_dist, ParticleSet};

/// Gaussian RBF kernel `k(x, y) = exp(-||x - y||^2 / bw_sq)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbfKernel {
    bw_sq: f64,
}

impl RbfKernel {
    /// Requires a strictly positive squared bandwidth.
    pub fn new(bw_sq: f64) -> Result<Self> {
        if !(bw_sq > 0.0) || !bw_sq.is_finite() {
            return Err(CoreError::InvalidConfig("squared bandwidth must be positive"));
        }
        Ok(Self { bw_sq })
    }

    /// Kernel with the median-heuristic bandwidth for `particles`.
    pub fn median_heuristic(particles: &ParticleSet) -> Self {
        Self {
            bw_sq: median_heuristic(particles),
        }
    }

    pub fn bandwidth_sq(&self) -> f64 {
        self.bw_sq
    }

    /// Evaluate `k(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dims(x, y)?;
        Ok((-sq_dist(x, y) / self.bw_sq).exp())
    }

    /// Gradient with respect to the first argument:
    /// `grad_x k(x, y) = -(2 / bw_sq) (x - y) k(x, y)`.
    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_dims(x, y)?;
        let k = (-sq_dist(x, y) / self.bw_sq).exp();
        let scale = -2.0 / self.bw_sq * k;
        Ok(x.iter().zip(y).map(|(xi, yi)| scale * (xi - yi)).collect())
    }

    /// Row-major `M x M` Gram matrix over a particle set.
    pub fn gram(&self, particles: &ParticleSet) -> Vec<f64> {
        let m = particles.count();
        let mut out = alloc::vec![0.0; m * m];
        for i in 0..m {
            out[i * m + i] = 1.0;
            for j in (i + 1)..m {
                let k = (-sq_dist(particles.row(i), particles.row(j)) / self.bw_sq).exp();
                out[i * m + j] = k;
                out[j * m + i] = k;
            }
        }
        out
    }
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(CoreError::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(())
}

/// Median-heuristic squared bandwidth: `med^2 / ln(M + 1)` where `med` is
/// the median pairwise distance over distinct particle pairs (lower-middle
/// order statistic for even counts). Falls back to `1.0` for a single
/// particle or an all-identical set.
pub fn median_heuristic(particles: &ParticleSet) -> f64 {
    let m = particles.count();
    if m < 2 {
        return 1.0;
    }
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            dists.push(sq_dist(particles.row(i), particles.row(j)));
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let med_sq = dists[(dists.len() - 1) / 2];
    if med_sq == 0.0 {
        return 1.0;
    }
    med_sq / ((m as f64) + 1.0).ln()
}
