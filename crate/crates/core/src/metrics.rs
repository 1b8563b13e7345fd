//! Distribution-approximation metrics: the quadratic Wasserstein surrogate
//! used for particle momentum, discrete KL/JSD, unbiased MMD², and moment
//! errors against known targets.

use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::kernels::RbfKernel;
use crate::particles::{sq_dist, ParticleSet};

/// Quadratic Wasserstein surrogate under the identity coupling:
/// `(1/M) Σ_i ‖cur_i − prev_i‖²`, pairing particle `i` across steps.
///
/// This is the empirical form of `E(θ − θ_{t−1})²` obtained when the
/// Kantorovich potential is restricted to quadratics; it upper-bounds the
/// true W²₂ between the two empirical distributions (see
/// [`w2_exact_sorted_1d`] for the 1-D exact value).
pub fn w2_quadratic(prev: &ParticleSet, cur: &ParticleSet) -> Result<f64> {
    if prev.count() != cur.count() || prev.dim() != cur.dim() {
        return Err(CoreError::Contract("particle sets must have identical shape"));
    }
    let total: f64 = prev
        .rows()
        .zip(cur.rows())
        .map(|(p, c)| sq_dist(p, c))
        .sum();
    Ok(total / prev.count() as f64)
}

/// Exact squared 2-Wasserstein distance between two equal-size 1-D
/// empirical distributions via the sorted (quantile) coupling.
pub fn w2_exact_sorted_1d(a: &ParticleSet, b: &ParticleSet) -> Result<f64> {
    if a.dim() != 1 || b.dim() != 1 {
        return Err(CoreError::Contract("sorted-coupling W2 is one-dimensional"));
    }
    if a.count() != b.count() {
        return Err(CoreError::Contract("sorted-coupling W2 needs equal sample counts"));
    }
    let mut xs: Vec<f64> = a.as_slice().to_vec();
    let mut ys: Vec<f64> = b.as_slice().to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("finite particles"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("finite particles"));
    let total: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(total / xs.len() as f64)
}

/// Probability vector over a finite alphabet; entries nonnegative and
/// summing to 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(CoreError::InvalidConfig("distribution needs a nonempty alphabet"));
        }
        if !probs.iter().all(|p| p.is_finite() && *p >= 0.0) {
            return Err(CoreError::InvalidConfig("probabilities must be finite and nonnegative"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(CoreError::InvalidConfig("probabilities must sum to 1 within 1e-12"));
        }
        Ok(Self { probs })
    }

    /// Normalize arbitrary nonnegative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() || !weights.iter().all(|w| w.is_finite() && *w >= 0.0) {
            return Err(CoreError::InvalidConfig("weights must be nonempty, finite, nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(CoreError::InvalidConfig("weights must have positive total mass"));
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn check_alphabet(p1: &DiscreteDist, p2: &DiscreteDist) -> Result<()> {
    if p1.len() != p2.len() {
        return Err(CoreError::Contract("distributions must share one alphabet"));
    }
    Ok(())
}

/// KL divergence `Σ p1 ln(p1/p2)` in nats, with `0·ln(0/q) = 0`.
///
/// A support violation (`p1_i > 0` where `p2_i = 0`) returns the `+∞`
/// sentinel rather than an error.
pub fn kl_discrete(p1: &DiscreteDist, p2: &DiscreteDist) -> Result<f64> {
    check_alphabet(p1, p2)?;
    let mut acc = 0.0;
    for (&a, &b) in p1.probs().iter().zip(p2.probs()) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc += a * (a / b).ln();
    }
    Ok(acc)
}

/// Jensen–Shannon divergence with base-2 logarithms, bounded in `[0, 1]`.
pub fn jsd_discrete(p1: &DiscreteDist, p2: &DiscreteDist) -> Result<f64> {
    check_alphabet(p1, p2)?;
    let ln2 = core::f64::consts::LN_2;
    let mut acc = 0.0;
    for (&a, &b) in p1.probs().iter().zip(p2.probs()) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            acc += 0.5 * a * (a / m).ln() / ln2;
        }
        if b > 0.0 {
            acc += 0.5 * b * (b / m).ln() / ln2;
        }
    }
    Ok(acc)
}

/// Unbiased U-statistic estimator of squared MMD between two sample sets.
///
/// `MMD² = mean_{i≠j} k(a_i,a_j) + mean_{i≠j} k(b_i,b_j) − 2·mean k(a_i,b_j)`.
/// The estimate may be slightly negative near zero.
pub fn mmd_squared(a: &ParticleSet, b: &ParticleSet, kernel: &RbfKernel) -> Result<f64> {
    if a.count() < 2 || b.count() < 2 {
        return Err(CoreError::Contract("MMD U-statistic needs at least two samples per set"));
    }
    if a.dim() != b.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let m = a.count() as f64;
    let n = b.count() as f64;
    let bw_sq = kernel.bandwidth_sq();
    let within = |s: &ParticleSet| -> f64 {
        let mut acc = 0.0;
        for i in 0..s.count() {
            for j in (i + 1)..s.count() {
                acc += (-sq_dist(s.row(i), s.row(j)) / bw_sq).exp();
            }
        }
        2.0 * acc
    };
    let mut cross = 0.0;
    for i in 0..a.count() {
        for j in 0..b.count() {
            cross += (-sq_dist(a.row(i), b.row(j)) / bw_sq).exp();
        }
    }
    Ok(within(a) / (m * (m - 1.0)) + within(b) / (n * (n - 1.0)) - 2.0 * cross / (m * n))
}

/// Biased V-statistic variant of squared MMD (diagonal terms included);
/// exactly zero when the two sets are identical.
pub fn mmd_squared_biased(a: &ParticleSet, b: &ParticleSet, kernel: &RbfKernel) -> Result<f64> {
    if a.count() == 0 || b.count() == 0 {
        return Err(CoreError::Contract("MMD needs nonempty sample sets"));
    }
    if a.dim() != b.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let bw_sq = kernel.bandwidth_sq();
    let full = |s: &ParticleSet, t: &ParticleSet| -> f64 {
        let mut acc = 0.0;
        for i in 0..s.count() {
            for j in 0..t.count() {
                acc += (-sq_dist(s.row(i), t.row(j)) / bw_sq).exp();
            }
        }
        acc
    };
    let m = a.count() as f64;
    let n = b.count() as f64;
    Ok(full(a, a) / (m * m) + full(b, b) / (n * n) - 2.0 * full(a, b) / (m * n))
}

/// Euclidean error of the sample mean and Frobenius error of the unbiased
/// sample covariance against known true moments. `true_cov` is row-major
/// `r × r`. With fewer than two particles the covariance error is the NaN
/// sentinel.
pub fn moment_errors(
    particles: &ParticleSet,
    true_mean: &[f64],
    true_cov: &[f64],
) -> Result<(f64, f64)> {
    let r = particles.dim();
    if true_mean.len() != r || true_cov.len() != r * r {
        return Err(CoreError::DimensionMismatch {
            expected: r,
            actual: true_mean.len(),
        });
    }
    let mean = particles.mean();
    let mean_err = mean
        .iter()
        .zip(true_mean)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if particles.count() < 2 {
        return Ok((mean_err, f64::NAN));
    }
    let cov = particles.covariance()?;
    let cov_err = cov
        .iter()
        .zip(true_cov)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok((mean_err, cov_err))
}
