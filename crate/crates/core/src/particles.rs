//! Particle sets: dense row-major `M x r` matrices of model parameters.
//!
//! The same container carries any row-aligned matrix over particles,
//! e.g. per-particle gradients or Stein directions.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};

/// `M x r` row-major matrix; row `i` is particle `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    data: Vec<f64>,
    count: usize,
    dim: usize,
}

impl ParticleSet {
    /// Zero-filled set of `count` particles in `dim` dimensions.
    pub fn zeros(count: usize, dim: usize) -> Self {
        Self {
            data: vec![0.0; count * dim],
            count,
            dim,
        }
    }

    /// Build from a flat row-major buffer.
    pub fn from_flat(count: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != count * dim {
            return Err(CoreError::DimensionMismatch {
                expected: count * dim,
                actual: data.len(),
            });
        }
        Ok(Self { data, count, dim })
    }

    /// Build from rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let count = rows.len();
        if count == 0 {
            return Err(CoreError::Contract("particle set must not be empty"));
        }
        let dim = rows[0].len();
        let mut data = Vec::with_capacity(count * dim);
        for row in rows {
            if row.len() != dim {
                return Err(CoreError::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { data, count, dim })
    }

    /// Number of particles `M`.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Parameter dimension `r`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Index of the first particle containing a non-finite entry.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.rows().position(|row| row.iter().any(|v| !v.is_finite()))
    }

    /// Column means (`r`-vector).
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= self.count as f64;
        }
        mean
    }

    /// Unbiased sample covariance, row-major `r x r`. Requires `M >= 2`.
    pub fn covariance(&self) -> Result<Vec<f64>> {
        if self.count < 2 {
            return Err(CoreError::Contract("covariance needs at least 2 particles"));
        }
        let mean = self.mean();
        let r = self.dim;
        let mut cov = vec![0.0; r * r];
        for row in self.rows() {
            for i in 0..r {
                let di = row[i] - mean[i];
                for j in 0..r {
                    cov[i * r + j] += di * (row[j] - mean[j]);
                }
            }
        }
        let denom = (self.count - 1) as f64;
        for c in &mut cov {
            *c /= denom;
        }
        Ok(cov)
    }
}

/// Squared Euclidean distance between two equal-length slices.
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
