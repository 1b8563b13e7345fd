//! Independent 1-D ground-truth machinery: an explicit finite-volume
//! Fokker–Planck solver and a discrete JKO stepper (KL-to-target plus a
//! scaled squared-Wasserstein proximity term), used to validate the particle
//! samplers at desk scale.

use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::particles::ParticleSet;

/// Uniform 1-D grid of `cells` cells on `[left, right]`.
///
/// Construction requires `cells ≥ 2`; the PDE solver additionally requires
/// `cells ≥ 8`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    left: f64,
    right: f64,
    cells: usize,
}

impl Grid1D {
    pub fn new(left: f64, right: f64, cells: usize) -> Result<Self> {
        if !left.is_finite() || !right.is_finite() || right <= left {
            return Err(CoreError::InvalidConfig("grid needs finite bounds with right > left"));
        }
        if cells < 2 {
            return Err(CoreError::InvalidConfig("grid needs at least two cells"));
        }
        Ok(Self { left, right, cells })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> f64 {
        (self.right - self.left) / self.cells as f64
    }

    /// Center of cell `i`.
    pub fn center(&self, i: usize) -> f64 {
        self.left + (i as f64 + 0.5) * self.dx()
    }

    /// Position of face `f` (faces `0..=cells` bound the cells).
    pub fn face(&self, f: usize) -> f64 {
        self.left + f as f64 * self.dx()
    }
}

/// Discretized probability density: nonnegative cell values with
/// `Σ values·Δx = 1` (normalized at construction, re-normalized after each
/// solver step).
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: Grid1D,
    values: Vec<f64>,
}

impl GridDensity {
    /// Normalize nonnegative cell values into a density.
    pub fn from_unnormalized(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(CoreError::GridMismatch("value count must equal cell count"));
        }
        if !values.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(CoreError::NonFinite {
                context: "grid density values",
            });
        }
        let mass: f64 = values.iter().sum::<f64>() * grid.dx();
        if !(mass > 0.0) {
            return Err(CoreError::InvalidConfig("density must have positive total mass"));
        }
        let values = values.iter().map(|v| v / mass).collect();
        Ok(Self { grid, values })
    }

    /// Evaluate `f` at the cell centers and normalize.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..grid.cells()).map(|i| f(grid.center(i))).collect();
        Self::from_unnormalized(grid, values)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Total mass `Σ values·Δx` (1 up to rounding).
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    /// Per-cell masses `values·Δx`.
    pub fn masses(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        self.values.iter().map(|v| v * dx).collect()
    }

    /// Mean by midpoint quadrature.
    pub fn mean(&self) -> f64 {
        let dx = self.grid.dx();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.center(i) * v * dx)
            .sum()
    }

    /// Variance by midpoint quadrature.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let dx = self.grid.dx();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let d = self.grid.center(i) - mean;
                d * d * v * dx
            })
            .sum()
    }
}

/// Total variation distance `(1/2) Σ |a_i − b_i|·Δx ∈ [0, 1]`.
pub fn tv_distance(a: &GridDensity, b: &GridDensity) -> Result<f64> {
    if a.grid != b.grid {
        return Err(CoreError::GridMismatch("densities live on different grids"));
    }
    let dx = a.grid.dx();
    Ok(0.5 * a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx)
}

/// Normalized histogram of 1-D particles; positions outside the grid are
/// clipped to the boundary cells and counted.
pub fn histogram(particles: &ParticleSet, grid: &Grid1D) -> Result<(GridDensity, usize)> {
    if particles.dim() != 1 {
        return Err(CoreError::Contract("histogram requires one-dimensional particles"));
    }
    let g = grid.cells();
    let dx = grid.dx();
    let mut counts = alloc::vec![0.0f64; g];
    let mut clipped = 0usize;
    for row in particles.rows() {
        let x = row[0];
        if x < grid.left() || x > grid.right() {
            clipped += 1;
        }
        let idx = ((x - grid.left()) / dx).floor();
        let idx = if idx < 0.0 {
            0
        } else if idx >= g as f64 {
            g - 1
        } else {
            idx as usize
        };
        counts[idx] += 1.0;
    }
    Ok((GridDensity::from_unnormalized(grid.clone(), counts)?, clipped))
}

/// Drift and diffusion of the Itô diffusion `dθ = F(θ)dt + g dW`, stored as
/// the Fokker–Planck pair `(F, D)` with `D = g²/2`.
#[derive(Debug, Clone)]
pub struct DiffusionSpec<F: Fn(f64) -> f64> {
    drift: F,
    diffusion: f64,
}

impl<F: Fn(f64) -> f64> DiffusionSpec<F> {
    pub fn new(drift: F, diffusion: f64) -> Result<Self> {
        if !diffusion.is_finite() || diffusion < 0.0 {
            return Err(CoreError::InvalidConfig("diffusion constant must be finite and nonnegative"));
        }
        Ok(Self { drift, diffusion })
    }

    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }
}

/// First-order Langevin dynamics for a log-density gradient:
/// `F = ∇ log p = −∇U`, `g = √2`, so `D = 1`.
pub fn langevin_spec<G: Fn(f64) -> f64>(grad_log_density: G) -> DiffusionSpec<impl Fn(f64) -> f64> {
    DiffusionSpec {
        drift: grad_log_density,
        diffusion: 1.0,
    }
}

/// Solve `∂ρ/∂t = −∂(ρF)/∂θ + D·∂²ρ/∂θ²` to time `t_final` by an explicit
/// conservative finite-volume scheme: upwinded advection, centered
/// diffusion, zero-flux boundaries.
///
/// `dt` must satisfy the stability bound `dt ≤ Δx²/(2D + |F|_max·Δx)`; the
/// final step is shortened to land exactly on `t_final`. The density is
/// re-normalized each step; cumulative mass drift beyond `1e-6` per unit
/// time aborts with an error.
pub fn fp_solve_1d<F: Fn(f64) -> f64>(
    spec: &DiffusionSpec<F>,
    init: &GridDensity,
    t_final: f64,
    dt: f64,
) -> Result<GridDensity> {
    let grid = init.grid().clone();
    let g = grid.cells();
    if g < 8 {
        return Err(CoreError::InvalidConfig("PDE solving needs at least eight cells"));
    }
    if !t_final.is_finite() || t_final < 0.0 || !dt.is_finite() || dt <= 0.0 {
        return Err(CoreError::InvalidConfig("time horizon and dt must be finite and positive"));
    }
    let dx = grid.dx();
    let d = spec.diffusion();

    // Drift at interior faces, fixed in time.
    let face_drift: Vec<f64> = (1..g).map(|f| spec.drift(grid.face(f))).collect();
    if !face_drift.iter().all(|v| v.is_finite()) {
        return Err(CoreError::NonFinite {
            context: "drift evaluation on the grid",
        });
    }
    let f_max = face_drift.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let bound = dx * dx / (2.0 * d + f_max * dx);
    if dt > bound {
        return Err(CoreError::UnstableStep { dt, bound });
    }

    let mut rho = init.values().to_vec();
    let mut flux = alloc::vec![0.0f64; g + 1];
    let mut t = 0.0;
    let mut drift_budget = 0.0;
    while t < t_final {
        let step = dt.min(t_final - t);
        for f in 1..g {
            let fd = face_drift[f - 1];
            let advective = if fd >= 0.0 { fd * rho[f - 1] } else { fd * rho[f] };
            let diffusive = -d * (rho[f] - rho[f - 1]) / dx;
            flux[f] = advective + diffusive;
        }
        for i in 0..g {
            rho[i] -= step / dx * (flux[i + 1] - flux[i]);
            if rho[i] < 0.0 {
                // upwinding keeps this at rounding level; clamp to preserve
                // nonnegativity
                rho[i] = 0.0;
            }
        }
        t += step;
        let mass: f64 = rho.iter().sum::<f64>() * dx;
        drift_budget += (mass - 1.0).abs();
        if drift_budget > 1e-6 * t.max(1.0) {
            return Err(CoreError::MassDrift { drift: drift_budget });
        }
        for v in rho.iter_mut() {
            *v /= mass;
        }
        if !rho.iter().all(|v| v.is_finite()) {
            return Err(CoreError::NonFinite {
                context: "Fokker-Planck solution",
            });
        }
    }
    GridDensity::from_unnormalized(grid, rho)
}

/// Exact squared 2-Wasserstein distance between two cell-histogram
/// densities on one grid, by integrating the squared quantile difference
/// over merged CDF breakpoints (Simpson's rule, exact for the piecewise
/// quadratic integrand).
pub fn w2_sq_grid(a: &GridDensity, b: &GridDensity) -> Result<f64> {
    if a.grid != b.grid {
        return Err(CoreError::GridMismatch("densities live on different grids"));
    }
    let wa = normalized_masses(&a.masses());
    let wb = normalized_masses(&b.masses());
    let sweep = quantile_sweep(a.grid(), &wa, &wb);
    Ok(sweep.w2_sq)
}

fn normalized_masses(masses: &[f64]) -> Vec<f64> {
    let total: f64 = masses.iter().sum();
    masses.iter().map(|m| m / total).collect()
}

struct SweepResult {
    w2_sq: f64,
    /// `I0[k] = ∫_{piece k of b} (Q_b − Q_a) du`
    i0: Vec<f64>,
    /// `I1[k] = ∫_{piece k of b} (Q_b − Q_a)(u − C_{k−1}) du`
    i1: Vec<f64>,
}

/// One pass over the merged CDF breakpoints of masses `wa` and `wb`,
/// accumulating the exact W²₂ and the per-cell integrals needed for its
/// gradient with respect to `wb`.
fn quantile_sweep(grid: &Grid1D, wa: &[f64], wb: &[f64]) -> SweepResult {
    let g = wa.len();
    let dx = grid.dx();
    let mut cum_a = alloc::vec![0.0f64; g + 1];
    let mut cum_b = alloc::vec![0.0f64; g + 1];
    for i in 0..g {
        cum_a[i + 1] = cum_a[i] + wa[i];
        cum_b[i + 1] = cum_b[i] + wb[i];
    }
    cum_a[g] = 1.0;
    cum_b[g] = 1.0;

    let quantile = |cell: usize, cum: &[f64], w: &[f64], u: f64| -> f64 {
        grid.left() + cell as f64 * dx + (u - cum[cell]) / w[cell] * dx
    };

    let mut w2_sq = 0.0;
    let mut i0 = alloc::vec![0.0f64; g];
    let mut i1 = alloc::vec![0.0f64; g];
    let (mut pa, mut pb) = (0usize, 0usize);
    let mut u0 = 0.0f64;
    while u0 < 1.0 {
        while pa + 1 < g && cum_a[pa + 1] <= u0 {
            pa += 1;
        }
        while pb + 1 < g && cum_b[pb + 1] <= u0 {
            pb += 1;
        }
        let u1 = cum_a[pa + 1].min(cum_b[pb + 1]).min(1.0);
        if u1 > u0 {
            let um = 0.5 * (u0 + u1);
            let width = u1 - u0;
            let diff = |u: f64| quantile(pb, &cum_b, wb, u) - quantile(pa, &cum_a, wa, u);
            let (d0, dm, d1) = (diff(u0), diff(um), diff(u1));
            w2_sq += width / 6.0 * (d0 * d0 + 4.0 * dm * dm + d1 * d1);
            i0[pb] += width / 6.0 * (d0 + 4.0 * dm + d1);
            let moment = |u: f64, d: f64| d * (u - cum_b[pb]);
            i1[pb] += width / 6.0
                * (moment(u0, d0) + 4.0 * moment(um, dm) + moment(u1, d1));
            u0 = u1;
        } else {
            // identical breakpoints: advance whichever pointer is stuck
            if cum_a[pa + 1] <= u0 && pa + 1 < g {
                pa += 1;
            } else if cum_b[pb + 1] <= u0 && pb + 1 < g {
                pb += 1;
            } else {
                break;
            }
        }
    }
    SweepResult { w2_sq, i0, i1 }
}

/// Gradient of `w2_sq_grid(a, ·)` with respect to the cell masses of `b`
/// (exact for the discrete functional): for piece `k`,
/// `∂W²₂/∂w_k = 2Δx·(Σ_{m>k} I0_m/w_m + I1_k/w_k²)` with the sign carried
/// by the integrals. Returned alongside the value to share the sweep.
fn w2_sq_with_grad(grid: &Grid1D, wa: &[f64], wb: &[f64]) -> (f64, Vec<f64>) {
    let g = wb.len();
    let dx = grid.dx();
    let sweep = quantile_sweep(grid, wa, wb);
    let mut grad = alloc::vec![0.0f64; g];
    // suffix sums of I0_m / w_m
    let mut suffix = 0.0;
    for k in (0..g).rev() {
        let own = if wb[k] > 0.0 {
            sweep.i1[k] / (wb[k] * wb[k])
        } else {
            0.0
        };
        grad[k] = -2.0 * dx * (suffix + own);
        if wb[k] > 0.0 {
            suffix += sweep.i0[k] / wb[k];
        }
    }
    (sweep.w2_sq, grad)
}

/// One JKO step: minimize `KL(ρ‖p) + (1/2h)·W²₂(prev, ρ)` over grid
/// densities by multiplicative mirror descent on the simplex of cell
/// masses, with a backtracking line search (the objective is monotonically
/// non-increasing) run to first-order stationarity `1e-8` relative to the
/// gradient scale.
///
/// `target_log_density` holds `log p` (up to a constant) at the cell
/// centers; `p` is normalized internally by grid quadrature.
pub fn jko_step_1d(prev: &GridDensity, target_log_density: &[f64], h: f64) -> Result<GridDensity> {
    let grid = prev.grid().clone();
    let g = grid.cells();
    if target_log_density.len() != g {
        return Err(CoreError::GridMismatch("target log-density must cover every cell"));
    }
    if !target_log_density.iter().all(|v| v.is_finite()) {
        return Err(CoreError::NonFinite {
            context: "target log-density on the grid",
        });
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(CoreError::InvalidConfig("JKO stepsize must be finite and positive"));
    }

    // normalized target masses
    let max_log = target_log_density.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v));
    let mut p_mass: Vec<f64> = target_log_density.iter().map(|v| (v - max_log).exp()).collect();
    let p_total: f64 = p_mass.iter().sum();
    for v in p_mass.iter_mut() {
        *v /= p_total;
    }

    let w_prev = normalized_masses(&prev.masses());

    let objective_and_grad = |w: &[f64]| -> (f64, Vec<f64>) {
        let (w2, w2_grad) = w2_sq_with_grad(&grid, &w_prev, w);
        let mut obj = w2 / (2.0 * h);
        let mut grad = alloc::vec![0.0f64; g];
        for k in 0..g {
            let wk = w[k].max(1e-300);
            let ratio = (wk / p_mass[k].max(1e-300)).ln();
            obj += w[k] * ratio;
            grad[k] = ratio + 1.0 + w2_grad[k] / (2.0 * h);
        }
        (obj, grad)
    };

    // The objective is convex, so any start reaches the optimum; pick the
    // best of the previous iterate, the target, and their mix so that the
    // two stepsize extremes both start essentially converged. Clamping
    // keeps every cell reachable by multiplicative updates.
    let clamped = |src: &[f64]| -> Vec<f64> {
        let mut v: Vec<f64> = src.iter().map(|m| m.max(1e-300)).collect();
        renormalize(&mut v);
        v
    };
    let mix: Vec<f64> = w_prev.iter().zip(&p_mass).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut w = clamped(&mix);
    let (mut obj, mut grad) = objective_and_grad(&w);
    for candidate in [clamped(&w_prev), clamped(&p_mass)] {
        let (cand_obj, cand_grad) = objective_and_grad(&candidate);
        if cand_obj < obj {
            w = candidate;
            obj = cand_obj;
            grad = cand_grad;
        }
    }

    let finish = |w: &[f64]| -> Result<GridDensity> {
        let dx = grid.dx();
        let values: Vec<f64> = w.iter().map(|m| m / dx).collect();
        GridDensity::from_unnormalized(grid.clone(), values)
    };

    let mut eta = 1.0 / (1.0 + max_abs_dev(&grad, &w));
    let mut flat_steps = 0u32;
    let cap = 200_000usize;
    for _ in 0..cap {
        // first-order stationarity on the simplex: the mass-weighted
        // residual of the gradient around its mean, relative to scale
        let mean_g: f64 = w.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let residual: f64 = w.iter().zip(&grad).map(|(a, b)| a * (b - mean_g).abs()).sum();
        let scale: f64 = 1.0 + w.iter().zip(&grad).map(|(a, b)| a * b.abs()).sum::<f64>();
        if residual <= 1e-8 * scale {
            return finish(&w);
        }

        let mut accepted = false;
        for _ in 0..90 {
            let mut trial: Vec<f64> = Vec::with_capacity(g);
            let shift = grad.iter().fold(f64::INFINITY, |a, v| a.min(*v));
            for k in 0..g {
                trial.push((w[k] * (-eta * (grad[k] - shift)).exp()).max(1e-300));
            }
            renormalize(&mut trial);
            let (trial_obj, trial_grad) = objective_and_grad(&trial);
            if trial_obj <= obj {
                if obj - trial_obj <= 1e-14 * (1.0 + obj.abs()) {
                    flat_steps += 1;
                } else {
                    flat_steps = 0;
                }
                w = trial;
                obj = trial_obj;
                grad = trial_grad;
                eta *= 1.5;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        // either the line search cannot improve at any stepsize or the
        // objective has been flat for a stretch: the iterate is stationary
        // to floating-point precision
        if !accepted || flat_steps >= 8 {
            return finish(&w);
        }
    }
    Err(CoreError::NoConvergence {
        iterations: cap,
        objective: obj,
    })
}

fn renormalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
}

fn max_abs_dev(grad: &[f64], w: &[f64]) -> f64 {
    let mean: f64 = w.iter().zip(grad).map(|(a, b)| a * b).sum();
    grad.iter().fold(0.0f64, |acc, v| acc.max((v - mean).abs()))
}
