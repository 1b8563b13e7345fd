//! Target posterior distributions: unnormalized log-densities, full-data
//! gradients, and minibatch stochastic gradients.
//!
//! Every model documents its additive-constant convention for the potential
//! energy `U(θ) = −log p(θ|X) + const`; only gradients and differences of `U`
//! are ever compared, so θ-independent constants may be dropped.

use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::particles::{dot, ParticleSet};
use crate::rng::{substream, Purpose};

/// A differentiable unnormalized log-density with minibatch gradient access.
///
/// `log_unnorm_density` returns `log p(θ|X) + const = −U(θ)`; the
/// normalizing constant is never computed.
pub trait TargetModel {
    /// Parameter dimension `r`.
    fn dim(&self) -> usize;

    /// Number of data points `N`; `0` for analytic targets with no data term.
    fn dataset_size(&self) -> usize {
        0
    }

    /// Unnormalized log posterior density at `θ`.
    fn log_unnorm_density(&self, theta: &[f64]) -> Result<f64>;

    /// Full gradient `∇_θ log p(θ|X) = −∇_θ U(θ)`.
    fn grad_log_density(&self, theta: &[f64]) -> Result<Vec<f64>>;

    /// Unbiased minibatch gradient estimate:
    /// `∇log p(θ) + (N/n) Σ_{i∈batch} ∇_θ log p(x_i|θ)`.
    ///
    /// Analytic targets (`N = 0`) ignore `batch` and return the full
    /// gradient; data-backed targets reject an empty batch.
    fn stochastic_grad(&self, theta: &[f64], batch: &[usize]) -> Result<Vec<f64>> {
        let _ = batch;
        self.grad_log_density(theta)
    }

    /// Standard deviation of a Gaussian prior usable for particle
    /// initialization, when the model has one.
    fn prior_init_std(&self) -> Option<f64> {
        None
    }
}

/// Potential energy `U(θ) = −log p(θ|X)` up to the model's documented
/// additive-constant convention.
pub fn potential_energy(model: &dyn TargetModel, theta: &[f64]) -> Result<f64> {
    Ok(-model.log_unnorm_density(theta)?)
}

fn check_dim(model_dim: usize, theta: &[f64]) -> Result<()> {
    if theta.len() != model_dim {
        return Err(CoreError::DimensionMismatch {
            expected: model_dim,
            actual: theta.len(),
        });
    }
    Ok(())
}

fn check_finite_grad(grad: &[f64]) -> Result<()> {
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite {
            context: "gradient evaluation overflowed",
        });
    }
    Ok(())
}

/// Gaussian target with diagonal covariance.
///
/// Convention: `U(θ) = Σ_i (θ_i − m_i)² / (2 v_i)`; the `½ log(2π v_i)`
/// normalizers are dropped.
#[derive(Debug, Clone)]
pub struct DiagGaussian {
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl DiagGaussian {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != var.len() {
            return Err(CoreError::InvalidConfig("mean and variance lengths must match and be nonzero"));
        }
        if !mean.iter().all(|m| m.is_finite()) || !var.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(CoreError::InvalidConfig("Gaussian parameters must be finite with positive variances"));
        }
        Ok(Self { mean, var })
    }

    /// Standard normal `N(0, I_r)`.
    pub fn standard(dim: usize) -> Result<Self> {
        Self::new(alloc::vec![0.0; dim], alloc::vec![1.0; dim])
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn var(&self) -> &[f64] {
        &self.var
    }
}

impl TargetModel for DiagGaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_unnorm_density(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.dim(), theta)?;
        let mut acc = 0.0;
        for i in 0..theta.len() {
            let d = theta[i] - self.mean[i];
            acc -= d * d / (2.0 * self.var[i]);
        }
        Ok(acc)
    }

    fn grad_log_density(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), theta)?;
        let grad: Vec<f64> = theta
            .iter()
            .zip(self.mean.iter().zip(&self.var))
            .map(|(t, (m, v))| -(t - m) / v)
            .collect();
        check_finite_grad(&grad)?;
        Ok(grad)
    }
}

/// Mixture of diagonal Gaussians.
///
/// Convention: component normalizers are kept (they set the relative
/// component masses); only a single global constant is dropped.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    log_weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
    dim: usize,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, vars: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() || weights.len() != vars.len() {
            return Err(CoreError::InvalidConfig("mixture needs matching weight/mean/variance counts"));
        }
        if !weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(CoreError::InvalidConfig("mixture weights must be positive"));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(CoreError::InvalidConfig("mixture components must have positive dimension"));
        }
        for (m, v) in means.iter().zip(&vars) {
            if m.len() != dim || v.len() != dim {
                return Err(CoreError::InvalidConfig("mixture components must share one dimension"));
            }
            if !m.iter().all(|x| x.is_finite()) || !v.iter().all(|x| x.is_finite() && *x > 0.0) {
                return Err(CoreError::InvalidConfig("mixture parameters must be finite with positive variances"));
            }
        }
        let total: f64 = weights.iter().sum();
        let log_weights = weights.iter().map(|w| (w / total).ln()).collect();
        Ok(Self {
            log_weights,
            means,
            vars,
            dim,
        })
    }

    /// Per-component joint `log w_c + log N(θ; m_c, diag v_c)`.
    fn component_log_joints(&self, theta: &[f64]) -> Vec<f64> {
        let half_log_two_pi = 0.5 * (2.0 * core::f64::consts::PI).ln();
        self.log_weights
            .iter()
            .zip(self.means.iter().zip(&self.vars))
            .map(|(lw, (m, v))| {
                let mut acc = *lw;
                for i in 0..self.dim {
                    let d = theta[i] - m[i];
                    acc -= d * d / (2.0 * v[i]) + 0.5 * v[i].ln() + half_log_two_pi;
                }
                acc
            })
            .collect()
    }
}

impl TargetModel for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_unnorm_density(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.dim, theta)?;
        Ok(log_sum_exp(&self.component_log_joints(theta)))
    }

    fn grad_log_density(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, theta)?;
        let joints = self.component_log_joints(theta);
        let lse = log_sum_exp(&joints);
        let mut grad = alloc::vec![0.0; self.dim];
        for (c, joint) in joints.iter().enumerate() {
            let resp = (joint - lse).exp();
            for i in 0..self.dim {
                grad[i] += resp * (self.means[c][i] - theta[i]) / self.vars[c][i];
            }
        }
        check_finite_grad(&grad)?;
        Ok(grad)
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// 1-D double-well target with `U(θ) = (θ² − 1)² / 4` (exact, no dropped
/// constants); the density is bimodal with modes at ±1.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleWell;

impl TargetModel for DoubleWell {
    fn dim(&self) -> usize {
        1
    }

    fn log_unnorm_density(&self, theta: &[f64]) -> Result<f64> {
        check_dim(1, theta)?;
        let t = theta[0];
        let w = t * t - 1.0;
        Ok(-w * w / 4.0)
    }

    fn grad_log_density(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim(1, theta)?;
        let t = theta[0];
        let grad = alloc::vec![-t * (t * t - 1.0)];
        check_finite_grad(&grad)?;
        Ok(grad)
    }
}

/// Supervised dataset: `n` rows of `d` features plus one label each.
///
/// Labels are free-form reals at this level; classification models enforce
/// their own label domain at construction.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    n: usize,
    d: usize,
}

impl Dataset {
    /// `features` is row-major `n × d`. `n = 0` builds an empty dataset
    /// (prior-only models); `d` must be positive.
    pub fn new(features: Vec<f64>, labels: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(CoreError::InvalidConfig("feature dimension must be positive"));
        }
        if features.len() != n * d || labels.len() != n {
            return Err(CoreError::Contract("feature/label buffer sizes must match n and d"));
        }
        if !features.iter().all(|v| v.is_finite()) || !labels.iter().all(|v| v.is_finite()) {
            return Err(CoreError::NonFinite {
                context: "dataset entries must be finite",
            });
        }
        Ok(Self {
            features,
            labels,
            n,
            d,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.d
    }

    pub fn feature_row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    /// True iff every label is exactly −1 or +1.
    pub fn has_binary_labels(&self) -> bool {
        self.labels.iter().all(|y| *y == -1.0 || *y == 1.0)
    }
}

/// Bayesian logistic regression with labels in {−1, +1}, likelihood
/// `σ(y·θᵀx)`, and isotropic Gaussian prior `N(0, α⁻¹ I)` (`α = 0` means a
/// flat prior).
///
/// Convention: `U(θ) = −Σ_i log σ(y_i θᵀx_i) + α‖θ‖²/2`; the prior
/// normalizer is dropped.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    data: Dataset,
    prior_precision: f64,
}

/// Default prior precision α for logistic regression.
pub const DEFAULT_PRIOR_PRECISION: f64 = 0.01;

impl LogisticRegression {
    pub fn new(data: Dataset, prior_precision: f64) -> Result<Self> {
        if !(prior_precision >= 0.0) || !prior_precision.is_finite() {
            return Err(CoreError::InvalidConfig("prior precision must be finite and nonnegative"));
        }
        if !data.has_binary_labels() {
            return Err(CoreError::InvalidConfig("logistic regression labels must be in {-1, +1}"));
        }
        Ok(Self {
            data,
            prior_precision,
        })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn prior_precision(&self) -> f64 {
        self.prior_precision
    }

    /// Accumulate `scale · Σ_{i∈batch} ∇_θ log σ(y_i θᵀx_i)` into `acc`,
    /// term by term in batch order. Scaling each term (rather than the sum)
    /// keeps the full-batch unit-scale case bitwise identical to the exact
    /// gradient.
    fn add_likelihood_grads(
        &self,
        theta: &[f64],
        batch: &[usize],
        scale: f64,
        acc: &mut [f64],
    ) -> Result<()> {
        for &i in batch {
            if i >= self.data.len() {
                return Err(CoreError::Contract("batch index out of range"));
            }
            let x = self.data.feature_row(i);
            let y = self.data.label(i);
            // d/dθ log σ(y θᵀx) = σ(−y θᵀx) · y · x
            let coeff = scale * sigmoid(-y * dot(theta, x)) * y;
            for (a, xi) in acc.iter_mut().zip(x) {
                *a += coeff * xi;
            }
        }
        Ok(())
    }

    fn prior_grad(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().map(|t| -self.prior_precision * t).collect()
    }
}

impl TargetModel for LogisticRegression {
    fn dim(&self) -> usize {
        self.data.feature_dim()
    }

    fn dataset_size(&self) -> usize {
        self.data.len()
    }

    fn log_unnorm_density(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.dim(), theta)?;
        let mut acc = -0.5 * self.prior_precision * dot(theta, theta);
        for i in 0..self.data.len() {
            let x = self.data.feature_row(i);
            acc += log_sigmoid(self.data.label(i) * dot(theta, x));
        }
        Ok(acc)
    }

    fn grad_log_density(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), theta)?;
        let mut grad = self.prior_grad(theta);
        let full: Vec<usize> = (0..self.data.len()).collect();
        self.add_likelihood_grads(theta, &full, 1.0, &mut grad)?;
        check_finite_grad(&grad)?;
        Ok(grad)
    }

    fn stochastic_grad(&self, theta: &[f64], batch: &[usize]) -> Result<Vec<f64>> {
        check_dim(self.dim(), theta)?;
        let n = self.data.len();
        if n == 0 {
            return self.grad_log_density(theta);
        }
        if batch.is_empty() {
            return Err(CoreError::Contract("minibatch must be nonempty"));
        }
        let scale = n as f64 / batch.len() as f64;
        let mut grad = self.prior_grad(theta);
        self.add_likelihood_grads(theta, batch, scale, &mut grad)?;
        check_finite_grad(&grad)?;
        Ok(grad)
    }

    fn prior_init_std(&self) -> Option<f64> {
        if self.prior_precision > 0.0 {
            Some(1.0 / self.prior_precision.sqrt())
        } else {
            None
        }
    }
}

/// Numerically stable `σ(z) = 1/(1 + e^{−z})`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `log σ(z) = −softplus(−z)`; avoids overflow for
/// `|z| > 30` via the linear/exponential asymptotes of softplus.
pub fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else if z < -30.0 {
        z.exp()
    } else {
        (1.0 + z.exp()).ln()
    }
}

/// Posterior-predictive test metrics for a logistic model.
///
/// The predictive probability of class +1 is the average of per-particle
/// sigmoids; accuracy thresholds it at 0.5 (ties predict +1); the returned
/// log-likelihood is the mean over test points of the log of the averaged
/// probability of the true label.
pub fn logistic_metrics(
    model: &LogisticRegression,
    particles: &ParticleSet,
    test: &Dataset,
) -> Result<(f64, f64)> {
    if test.is_empty() {
        return Err(CoreError::Contract("test set must be nonempty"));
    }
    if test.feature_dim() != model.dim() || particles.dim() != model.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: model.dim(),
            actual: test.feature_dim(),
        });
    }
    if !test.has_binary_labels() {
        return Err(CoreError::InvalidConfig("logistic test labels must be in {-1, +1}"));
    }
    let m = particles.count() as f64;
    let mut correct = 0usize;
    let mut log_lik = 0.0;
    for i in 0..test.len() {
        let x = test.feature_row(i);
        let y = test.label(i);
        let mut prob_pos = 0.0;
        for theta in particles.rows() {
            prob_pos += sigmoid(dot(theta, x));
        }
        prob_pos /= m;
        let predicted = if prob_pos >= 0.5 { 1.0 } else { -1.0 };
        if predicted == y {
            correct += 1;
        }
        let prob_true = if y > 0.0 { prob_pos } else { 1.0 - prob_pos };
        log_lik += prob_true.ln();
    }
    let n = test.len() as f64;
    Ok((correct as f64 / n, log_lik / n))
}

/// Shuffled-epoch minibatch schedule: a seeded permutation of `{0..N}` is
/// consumed in chunks of `batch_size`; every index appears exactly once per
/// epoch, so the final chunk of an epoch may be shorter when `batch_size`
/// does not divide `N`. A fresh permutation is drawn at each epoch boundary.
#[derive(Debug, Clone)]
pub struct MinibatchSchedule {
    order: Vec<usize>,
    batch_size: usize,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl MinibatchSchedule {
    pub fn new(data_size: usize, batch_size: usize, seed: u64) -> Result<Self> {
        if batch_size == 0 || batch_size > data_size {
            return Err(CoreError::InvalidConfig("batch size must be in 1..=N"));
        }
        let mut schedule = Self {
            order: (0..data_size).collect(),
            batch_size,
            cursor: 0,
            rng: substream(seed, Purpose::MinibatchShuffle, 0, 0),
        };
        schedule.reshuffle();
        Ok(schedule)
    }

    fn reshuffle(&mut self) {
        self.order.shuffle(&mut self.rng);
        self.cursor = 0;
    }

    /// Next batch of indices; length `batch_size` except possibly at the end
    /// of an epoch.
    pub fn next_batch(&mut self) -> Vec<usize> {
        if self.cursor >= self.order.len() {
            self.reshuffle();
        }
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let batch = self.order[self.cursor..end].to_vec();
        self.cursor = end;
        batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    /// Central-difference gradient of the unnormalized log density.
    fn fd_grad(model: &dyn TargetModel, theta: &[f64]) -> Vec<f64> {
        (0..theta.len())
            .map(|i| {
                let h = 1e-6 * (1.0 + theta[i].abs());
                let mut tp = theta.to_vec();
                let mut tm = theta.to_vec();
                tp[i] += h;
                tm[i] -= h;
                (model.log_unnorm_density(&tp).unwrap() - model.log_unnorm_density(&tm).unwrap())
                    / (2.0 * h)
            })
            .collect()
    }

    fn assert_grad_consistent(model: &dyn TargetModel, points: usize, seed: u64) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..points {
            let theta: Vec<f64> = (0..model.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let grad = model.grad_log_density(&theta).unwrap();
            let fd = fd_grad(model, &theta);
            for (g, f) in grad.iter().zip(&fd) {
                assert_relative_eq!(*g, *f, max_relative = 1e-5, epsilon = 1e-7);
            }
        }
    }

    fn small_logistic() -> LogisticRegression {
        // N=6, d=2 hand-fixed dataset
        let features = vec![
            0.5, -1.0, //
            1.5, 0.3, //
            -0.7, 0.9, //
            0.2, 2.0, //
            -1.2, -0.4, //
            0.8, 1.1,
        ];
        let labels = vec![1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        LogisticRegression::new(Dataset::new(features, labels, 6, 2).unwrap(), 0.5).unwrap()
    }

    #[test]
    fn standard_gaussian_potential_values() {
        let g = DiagGaussian::standard(1).unwrap();
        assert_eq!(potential_energy(&g, &[0.0]).unwrap(), 0.0);
        assert_eq!(potential_energy(&g, &[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn standard_gaussian_grad_is_negated_theta() {
        let g = DiagGaussian::standard(3).unwrap();
        let theta = [0.3, -1.7, 2.5];
        assert_eq!(g.grad_log_density(&theta).unwrap(), vec![-0.3, 1.7, -2.5]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let g = DiagGaussian::standard(2).unwrap();
        assert!(matches!(
            g.log_unnorm_density(&[1.0]),
            Err(CoreError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mixture_grad_vanishes_at_symmetry_midpoint() {
        let mix = GaussianMixture::new(
            vec![0.5, 0.5],
            vec![vec![-2.0], vec![2.0]],
            vec![vec![0.7], vec![0.7]],
        )
        .unwrap();
        let grad = mix.grad_log_density(&[0.0]).unwrap();
        assert!(grad[0].abs() < 1e-14, "grad at midpoint = {}", grad[0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        assert_grad_consistent(&DiagGaussian::new(vec![0.4, -1.0], vec![0.5, 2.0]).unwrap(), 100, 11);
        assert_grad_consistent(
            &GaussianMixture::new(
                vec![0.3, 0.7],
                vec![vec![-1.0, 0.5], vec![1.5, -0.5]],
                vec![vec![0.4, 1.1], vec![0.9, 0.6]],
            )
            .unwrap(),
            100,
            12,
        );
        assert_grad_consistent(&DoubleWell, 100, 13);
        assert_grad_consistent(&small_logistic(), 100, 14);
    }

    #[test]
    fn logistic_single_point_flat_prior_potential() {
        let data = Dataset::new(vec![1.0], vec![1.0], 1, 1).unwrap();
        let model = LogisticRegression::new(data, 0.0).unwrap();
        assert_relative_eq!(
            potential_energy(&model, &[0.0]).unwrap(),
            2.0f64.ln(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn full_batch_equals_full_gradient_exactly() {
        let model = small_logistic();
        let theta = [0.6, -0.9];
        let full: Vec<usize> = (0..6).collect();
        assert_eq!(
            model.stochastic_grad(&theta, &full).unwrap(),
            model.grad_log_density(&theta).unwrap()
        );
    }

    #[test]
    fn minibatch_unbiased_by_exhaustive_enumeration() {
        let model = small_logistic();
        let theta = [0.3, 1.2];
        let full = model.grad_log_density(&theta).unwrap();
        let mut mean = vec![0.0; 2];
        let mut count = 0.0;
        for i in 0..6 {
            for j in (i + 1)..6 {
                let g = model.stochastic_grad(&theta, &[i, j]).unwrap();
                for (m, v) in mean.iter_mut().zip(&g) {
                    *m += v;
                }
                count += 1.0;
            }
        }
        assert_eq!(count, 15.0);
        for (m, f) in mean.iter().zip(&full) {
            assert_relative_eq!(m / count, *f, epsilon = 1e-12);
        }
    }

    #[test]
    fn prior_only_logistic_reduces_to_prior_gradient() {
        let data = Dataset::new(vec![], vec![], 0, 3).unwrap();
        let model = LogisticRegression::new(data, 2.0).unwrap();
        let theta = [1.0, -2.0, 0.5];
        assert_eq!(model.stochastic_grad(&theta, &[]).unwrap(), vec![-2.0, 4.0, -1.0]);
        assert_eq!(model.stochastic_grad(&theta, &[7]).unwrap(), vec![-2.0, 4.0, -1.0]);
    }

    #[test]
    fn empty_batch_rejected_with_data() {
        let model = small_logistic();
        assert!(matches!(
            model.stochastic_grad(&[0.0, 0.0], &[]),
            Err(CoreError::Contract(_))
        ));
    }

    #[test]
    fn analytic_target_ignores_batch() {
        let g = DiagGaussian::standard(2).unwrap();
        let theta = [0.7, -0.2];
        assert_eq!(
            g.stochastic_grad(&theta, &[3, 1, 4]).unwrap(),
            g.grad_log_density(&theta).unwrap()
        );
    }

    #[test]
    fn logistic_rejects_bad_labels() {
        let data = Dataset::new(vec![1.0, 2.0], vec![0.0, 1.0], 2, 1).unwrap();
        assert!(LogisticRegression::new(data, 1.0).is_err());
    }

    #[test]
    fn dataset_rejects_non_finite() {
        assert!(Dataset::new(vec![f64::NAN], vec![1.0], 1, 1).is_err());
        assert!(Dataset::new(vec![1.0], vec![f64::INFINITY], 1, 1).is_err());
    }

    #[test]
    fn log_sigmoid_stable_in_tails() {
        assert_relative_eq!(log_sigmoid(100.0), 0.0, epsilon = 1e-15);
        assert_relative_eq!(log_sigmoid(-100.0), -100.0, max_relative = 1e-12);
        assert!(log_sigmoid(-1e8).is_finite());
        assert!(sigmoid(1e8) == 1.0 && sigmoid(-1e8) == 0.0);
    }

    #[test]
    fn single_particle_at_origin_predicts_half() {
        let model = small_logistic();
        let particles = ParticleSet::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let (_, ll) = logistic_metrics(&model, &particles, model.data()).unwrap();
        assert_relative_eq!(ll, -(2.0f64.ln()), max_relative = 1e-14);
    }

    #[test]
    fn identical_particles_match_single_particle_prediction() {
        let model = small_logistic();
        let one = ParticleSet::from_rows(&[vec![0.4, -0.7]]).unwrap();
        let five = ParticleSet::from_rows(&vec![vec![0.4, -0.7]; 5]).unwrap();
        let a = logistic_metrics(&model, &one, model.data()).unwrap();
        let b = logistic_metrics(&model, &five, model.data()).unwrap();
        assert_eq!(a.0, b.0);
        assert_relative_eq!(a.1, b.1, max_relative = 1e-14);
    }

    #[test]
    fn hand_evaluated_two_particle_metrics() {
        // d=1, particles θ = {1.0, −0.5}; test points (x, y):
        // (2, +1), (−1, −1), (0.5, −1); expected values frozen from a
        // brute-force sigmoid-averaging evaluation done separately.
        let data = Dataset::new(vec![2.0, -1.0, 0.5], vec![1.0, -1.0, -1.0], 3, 1).unwrap();
        let model = LogisticRegression::new(Dataset::new(vec![], vec![], 0, 1).unwrap(), 0.0).unwrap();
        let particles = ParticleSet::from_rows(&[vec![1.0], vec![-0.5]]).unwrap();
        let (acc, ll) = logistic_metrics(&model, &particles, &data).unwrap();
        assert_relative_eq!(acc, 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(ll, -0.63299535672885787, epsilon = 1e-12);
    }

    #[test]
    fn empty_test_set_rejected() {
        let model = small_logistic();
        let particles = ParticleSet::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let empty = Dataset::new(vec![], vec![], 0, 2).unwrap();
        assert!(matches!(
            logistic_metrics(&model, &particles, &empty),
            Err(CoreError::Contract(_))
        ));
    }

    #[test]
    fn minibatch_epoch_covers_every_index_once() {
        let mut schedule = MinibatchSchedule::new(10, 3, 99).unwrap();
        for _ in 0..4 {
            let mut seen = vec![0usize; 10];
            let mut epoch: Vec<usize> = Vec::new();
            while epoch.len() < 10 {
                let batch = schedule.next_batch();
                assert!(batch.len() <= 3);
                epoch.extend_from_slice(&batch);
            }
            assert_eq!(epoch.len(), 10);
            for i in epoch {
                seen[i] += 1;
            }
            assert!(seen.iter().all(|c| *c == 1));
        }
    }

    #[test]
    fn minibatch_batches_have_requested_size_when_divisible() {
        let mut schedule = MinibatchSchedule::new(12, 4, 7).unwrap();
        for _ in 0..9 {
            assert_eq!(schedule.next_batch().len(), 4);
        }
    }

    #[test]
    fn minibatch_schedule_deterministic() {
        let mut a = MinibatchSchedule::new(20, 6, 123).unwrap();
        let mut b = MinibatchSchedule::new(20, 6, 123).unwrap();
        for _ in 0..10 {
            assert_eq!(a.next_batch(), b.next_batch());
        }
    }

    #[test]
    fn minibatch_rejects_bad_sizes() {
        assert!(MinibatchSchedule::new(5, 0, 1).is_err());
        assert!(MinibatchSchedule::new(5, 6, 1).is_err());
    }
}
