//! Iterative particle updaters — SGLD, SGHMC, SVGD, and particle-optimized
//! SG-MCMC (noisy Stein direction with Polyak momentum) — plus a common
//! seeded run loop.
//!
//! All injected noise is drawn from substreams keyed by
//! `(seed, purpose, iteration, particle)`, so trajectories are identical
//! whether particles are processed serially or in parallel.

use alloc::boxed::Box;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};
use crate::kernels::RbfKernel;
use crate::particles::ParticleSet;
use crate::rng::{substream, Purpose};
use crate::stein::stein_direction;
use crate::targets::{MinibatchSchedule, TargetModel};

/// Which updater drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Sgld,
    Sghmc,
    Svgd,
    PoSgmcmc,
}

impl SamplerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::Sgld => "sgld",
            SamplerKind::Sghmc => "sghmc",
            SamplerKind::Svgd => "svgd",
            SamplerKind::PoSgmcmc => "po_sgmcmc",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "sgld" => Some(SamplerKind::Sgld),
            "sghmc" => Some(SamplerKind::Sghmc),
            "svgd" => Some(SamplerKind::Svgd),
            "po_sgmcmc" | "po-sgmcmc" | "po" => Some(SamplerKind::PoSgmcmc),
            _ => None,
        }
    }

    pub fn all() -> [SamplerKind; 4] {
        [
            SamplerKind::Sgld,
            SamplerKind::Sghmc,
            SamplerKind::Svgd,
            SamplerKind::PoSgmcmc,
        ]
    }
}

/// Hyperparameters shared across samplers; each updater reads the fields
/// it needs.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    /// Stepsize `h ≥ 0` (0 is a degenerate no-op step, useful in tests).
    pub stepsize: f64,
    /// Polyak momentum scale `μ ∈ [0, 1)`.
    pub momentum: f64,
    /// Initial injected-noise scale `σ₀ ≥ 0` for the Stein-direction noise.
    pub noise_scale: f64,
    /// Polynomial decay exponent `γ ≥ 0` in `σ_ℓ = σ₀ / ℓ^γ`.
    pub noise_decay: f64,
    /// SGHMC friction `B > 0`.
    pub friction: f64,
    /// Minibatch size `n`; `0` means full-data gradients.
    pub batch_size: usize,
    /// Seed for every random substream of the run.
    pub seed: u64,
    /// Particle count `M ≥ 1` (independent chains for SGLD/SGHMC).
    pub particles: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            stepsize: 0.1,
            momentum: 0.1,
            noise_scale: 0.1,
            noise_decay: 0.55,
            friction: 1.0,
            batch_size: 0,
            seed: 0,
            particles: 20,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.stepsize.is_finite() || self.stepsize < 0.0 {
            return Err(CoreError::InvalidConfig("stepsize must be finite and nonnegative"));
        }
        if !self.momentum.is_finite() || !(0.0..1.0).contains(&self.momentum) {
            return Err(CoreError::InvalidConfig("momentum must lie in [0, 1)"));
        }
        if !self.noise_scale.is_finite() || self.noise_scale < 0.0 {
            return Err(CoreError::InvalidConfig("noise scale must be finite and nonnegative"));
        }
        if !self.noise_decay.is_finite() || self.noise_decay < 0.0 {
            return Err(CoreError::InvalidConfig("noise decay must be finite and nonnegative"));
        }
        if !self.friction.is_finite() || self.friction <= 0.0 {
            return Err(CoreError::InvalidConfig("friction must be finite and positive"));
        }
        if self.particles == 0 {
            return Err(CoreError::InvalidConfig("particle count must be positive"));
        }
        Ok(())
    }
}

/// Where the initial particles come from.
#[derive(Debug, Clone)]
pub enum InitSpec {
    /// The model's Gaussian prior when it has one, else `N(0, I)`.
    Default,
    /// Isotropic Gaussian with the given mean and scalar standard deviation.
    Normal { mean: Vec<f64>, std: f64 },
    /// Every particle starts at the same point.
    PointMass(Vec<f64>),
}

/// Mutable state of a particle run.
#[derive(Debug, Clone)]
pub struct SamplerState {
    /// Particle positions `θ^{(ℓ)}`.
    pub current: ParticleSet,
    /// Positions one step back `θ^{(ℓ−1)}`; equals `current` at `ℓ = 0` so
    /// the first momentum term vanishes.
    pub previous: ParticleSet,
    /// SGHMC momenta `q`, created lazily on the first SGHMC step.
    pub momentum: Option<ParticleSet>,
    /// Completed steps `ℓ`.
    pub iteration: u64,
    seed: u64,
}

impl SamplerState {
    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draw `M` i.i.d. particles from `init` (seeded per particle, so the
/// result does not depend on draw order).
pub fn init_particles(
    config: &SamplerConfig,
    model: &dyn TargetModel,
    init: &InitSpec,
) -> Result<SamplerState> {
    config.validate()?;
    let r = model.dim();
    let m = config.particles;
    let mut current = ParticleSet::zeros(m, r);
    match init {
        InitSpec::PointMass(theta) => {
            if theta.len() != r {
                return Err(CoreError::DimensionMismatch {
                    expected: r,
                    actual: theta.len(),
                });
            }
            for i in 0..m {
                current.row_mut(i).copy_from_slice(theta);
            }
        }
        InitSpec::Normal { mean, std } => {
            if mean.len() != r {
                return Err(CoreError::DimensionMismatch {
                    expected: r,
                    actual: mean.len(),
                });
            }
            if !std.is_finite() || *std < 0.0 {
                return Err(CoreError::InvalidConfig("init std must be finite and nonnegative"));
            }
            fill_gaussian(&mut current, config.seed, mean, *std);
        }
        InitSpec::Default => {
            let std = model.prior_init_std().unwrap_or(1.0);
            let mean = alloc::vec![0.0; r];
            fill_gaussian(&mut current, config.seed, &mean, std);
        }
    }
    Ok(SamplerState {
        previous: current.clone(),
        current,
        momentum: None,
        iteration: 0,
        seed: config.seed,
    })
}

fn fill_gaussian(particles: &mut ParticleSet, seed: u64, mean: &[f64], std: f64) {
    for i in 0..particles.count() {
        let mut rng = substream(seed, Purpose::ParticleInit, i as u64, 0);
        for (c, v) in particles.row_mut(i).iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = mean[c] + std * z;
        }
    }
}

fn check_step_inputs(state: &SamplerState, model: &dyn TargetModel, config: &SamplerConfig) -> Result<()> {
    config.validate()?;
    if state.current.dim() != model.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: model.dim(),
            actual: state.current.dim(),
        });
    }
    Ok(())
}

fn commit(state: &mut SamplerState, new: ParticleSet) -> Result<()> {
    let iteration = state.iteration + 1;
    if let Some(particle) = new.first_non_finite() {
        return Err(CoreError::Divergence { iteration, particle });
    }
    state.previous = core::mem::replace(&mut state.current, new);
    state.iteration = iteration;
    Ok(())
}

/// One SGLD step per particle (independent chains):
/// `θ ← θ − ∇Ũ(θ)·h + √(2h)·δ`, `δ ~ N(0, I)`.
pub fn sgld_step(
    state: &mut SamplerState,
    model: &dyn TargetModel,
    config: &SamplerConfig,
    batch: &[usize],
) -> Result<()> {
    sgld_step_scaled(state, model, config, batch, (2.0 * config.stepsize).sqrt())
}

/// SGLD update with an explicit noise standard deviation (the public step
/// passes the Langevin-intrinsic `√(2h)`; tests pass 0 to recover plain
/// gradient descent).
pub(crate) fn sgld_step_scaled(
    state: &mut SamplerState,
    model: &dyn TargetModel,
    config: &SamplerConfig,
    batch: &[usize],
    noise_std: f64,
) -> Result<()> {
    check_step_inputs(state, model, config)?;
    let h = config.stepsize;
    let iteration = state.iteration + 1;
    let mut new = state.current.clone();
    for i in 0..new.count() {
        let grad = model.stochastic_grad(state.current.row(i), batch)?;
        let mut rng = substream(state.seed, Purpose::SgldNoise, iteration, i as u64);
        for (c, v) in new.row_mut(i).iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += h * grad[c] + noise_std * z;
        }
    }
    commit(state, new)
}

/// One SGHMC step: naive Euler discretization of the second-order Langevin
/// diffusion with friction `B`, evaluating the drift at the pre-step state:
/// `θ ← θ + q·h`, `q ← q − (B·q + ∇Ũ(θ))·h + √(2Bh)·δ`.
pub fn sghmc_step(
    state: &mut SamplerState,
    model: &dyn TargetModel,
    config: &SamplerConfig,
    batch: &[usize],
) -> Result<()> {
    sghmc_step_scaled(
        state,
        model,
        config,
        batch,
        (2.0 * config.friction * config.stepsize).sqrt(),
    )
}

pub(crate) fn sghmc_step_scaled(
    state: &mut SamplerState,
    model: &dyn TargetModel,
    config: &SamplerConfig,
    batch: &[usize],
    noise_std: f64,
) -> Result<()> {
    check_step_inputs(state, model, config)?;
    let h = config.stepsize;
    let b = config.friction;
    let iteration = state.iteration + 1;
    let (m, r) = (state.current.count(), state.current.dim());
    if state.momentum.is_none() {
        state.momentum = Some(ParticleSet::zeros(m, r));
    }
    let mut q = state.momentum.take().expect("momentum was just initialized");
    let mut new = state.current.clone();
    for i in 0..m {
        // ∇Ũ(θ) = −stochastic_grad; both updates read the pre-step state
        let grad = model.stochastic_grad(state.current.row(i), batch)?;
        let mut rng = substream(state.seed, Purpose::SghmcNoise, iteration, i as u64);
        let qi = q.row_mut(i);
        let ni = new.row_mut(i);
        for c in 0..r {
            let z: f64 = StandardNormal.sample(&mut rng);
            ni[c] += qi[c] * h;
            qi[c] += (-b * qi[c] + grad[c]) * h + noise_std * z;
        }
    }
    let bad_momentum = q.first_non_finite();
    state.momentum = Some(q);
    if let Some(particle) = bad_momentum {
        return Err(CoreError::Divergence { iteration, particle });
    }
    commit(state, new)
}

/// Stein direction at the current particles with a freshly fitted
/// median-heuristic bandwidth and per-particle stochastic gradients.
fn current_stein_direction(
    state: &SamplerState,
    model: &dyn TargetModel,
    batch: &[usize],
) -> Result<ParticleSet> {
    let (m, r) = (state.current.count(), state.current.dim());
    let mut grads = ParticleSet::zeros(m, r);
    for i in 0..m {
        let g = model.stochastic_grad(state.current.row(i), batch)?;
        grads.row_mut(i).copy_from_slice(&g);
    }
    let kernel = RbfKernel::median_heuristic(&state.current);
    stein_direction(&state.current, &kernel, &grads)
}

/// One SVGD step: `θ_i ← θ_i + h·φ̂*(θ_i)` with the kernel bandwidth
/// refitted from the current particles.
pub fn svgd_step(
    state: &mut SamplerState,
    model: &dyn TargetModel,
    config: &SamplerConfig,
    batch: &[usize],
) -> Result<()> {
    check_step_inputs(state, model, config)?;
    let h = config.stepsize;
    let phi = current_stein_direction(state, model, batch)?;
    let mut new = state.current.clone();
    for i in 0..new.count() {
        for (v, p) in new.row_mut(i).iter_mut().zip(phi.row(i)) {
            *v += h * p;
        }
    }
    commit(state, new)
}

/// One particle-optimized SG-MCMC step:
///
/// `θ_i^{(ℓ)} = θ_i^{(ℓ−1)} + h·(φ̂*(θ_i^{(ℓ−1)}) + σ_ℓ·δ) + μ·(θ_i^{(ℓ−1)} − θ_i^{(ℓ−2)})`
///
/// with `σ_ℓ = σ₀ / ℓ^γ` and `δ ~ N(0, I)` per particle per step. The Stein
/// term is taken with a positive sign (ascent), which makes the
/// `σ₀ = 0, μ = 0` case coincide exactly with SVGD; the momentum term is
/// zero on the first step because `previous == current` at initialization.
pub fn po_sgmcmc_step(
    state: &mut SamplerState,
    model: &dyn TargetModel,
    config: &SamplerConfig,
    batch: &[usize],
) -> Result<()> {
    check_step_inputs(state, model, config)?;
    let h = config.stepsize;
    let mu = config.momentum;
    let iteration = state.iteration + 1;
    let sigma = config.noise_scale / (iteration as f64).powf(config.noise_decay);
    let phi = current_stein_direction(state, model, batch)?;
    let mut new = state.current.clone();
    for i in 0..new.count() {
        let mut rng = substream(state.seed, Purpose::PoNoise, iteration, i as u64);
        let cur = state.current.row(i);
        let prev = state.previous.row(i);
        let ni = new.row_mut(i);
        for c in 0..ni.len() {
            let z: f64 = StandardNormal.sample(&mut rng);
            ni[c] = cur[c] + h * (phi.row(i)[c] + sigma * z) + mu * (cur[c] - prev[c]);
        }
    }
    commit(state, new)
}

/// One record of a run trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: u64,
    /// Seconds since the run started, from the injected clock.
    pub wall_time: f64,
    pub metric: &'static str,
    pub value: f64,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Completed,
    /// A step produced a non-finite value; records up to the failing
    /// iteration are retained.
    Diverged {
        iteration: u64,
        particle: Option<usize>,
    },
}

/// Per-iteration metric records of one `(sampler, seed)` run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub sampler: SamplerKind,
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    pub outcome: RunOutcome,
}

/// A named metric evaluated on the evolving state every hook period.
pub struct MetricHook<'a> {
    pub name: &'static str,
    pub eval: Box<dyn FnMut(&SamplerState) -> f64 + 'a>,
}

impl<'a> MetricHook<'a> {
    pub fn new(name: &'static str, eval: impl FnMut(&SamplerState) -> f64 + 'a) -> Self {
        Self {
            name,
            eval: Box::new(eval),
        }
    }
}

/// Drive `iterations` steps of the chosen sampler from a fresh
/// `init_particles` state, evaluating `hooks` every `hook_period`
/// iterations (0 disables hooks). Minibatches follow a seeded
/// shuffled-epoch schedule when the model has data and
/// `config.batch_size > 0`.
///
/// `clock` supplies wall-time seconds for trace records (injected so the
/// core stays free of platform timers). With a fixed seed the
/// `(iteration, metric, value)` content of the trace is bit-identical
/// across runs and thread counts; a divergence aborts the run and is
/// reported in the outcome with the partial trace retained.
#[allow(clippy::too_many_arguments)]
pub fn run(
    kind: SamplerKind,
    model: &dyn TargetModel,
    config: &SamplerConfig,
    init: &InitSpec,
    iterations: u64,
    hook_period: u64,
    hooks: &mut [MetricHook<'_>],
    clock: &mut dyn FnMut() -> f64,
) -> Result<RunTrace> {
    let mut state = init_particles(config, model, init)?;
    let data_size = model.dataset_size();
    let mut schedule = if data_size > 0 && config.batch_size > 0 {
        Some(MinibatchSchedule::new(data_size, config.batch_size, config.seed)?)
    } else {
        None
    };
    let full_batch: Vec<usize> = (0..data_size).collect();
    let start = clock();
    let mut records = Vec::new();
    let mut outcome = RunOutcome::Completed;

    for _ in 0..iterations {
        let batch = match &mut schedule {
            Some(s) => s.next_batch(),
            None => full_batch.clone(),
        };
        let stepped = match kind {
            SamplerKind::Sgld => sgld_step(&mut state, model, config, &batch),
            SamplerKind::Sghmc => sghmc_step(&mut state, model, config, &batch),
            SamplerKind::Svgd => svgd_step(&mut state, model, config, &batch),
            SamplerKind::PoSgmcmc => po_sgmcmc_step(&mut state, model, config, &batch),
        };
        match stepped {
            Ok(()) => {}
            Err(CoreError::Divergence { iteration, particle }) => {
                outcome = RunOutcome::Diverged {
                    iteration,
                    particle: Some(particle),
                };
                break;
            }
            Err(CoreError::NonFinite { .. }) => {
                outcome = RunOutcome::Diverged {
                    iteration: state.iteration + 1,
                    particle: None,
                };
                break;
            }
            Err(other) => return Err(other),
        }
        if hook_period > 0 && state.iteration % hook_period == 0 {
            let elapsed = clock() - start;
            for hook in hooks.iter_mut() {
                let value = (hook.eval)(&state);
                records.push(TraceRecord {
                    iteration: state.iteration,
                    wall_time: elapsed,
                    metric: hook.name,
                    value,
                });
            }
        }
    }

    Ok(RunTrace {
        sampler: kind,
        seed: config.seed,
        records,
        outcome,
    })
}
