//! # posteriorflow-core
//!
//! Particle-based Bayesian sampling primitives.
//!
//! The crate provides four iterative samplers over a shared particle
//! representation:
//!
//! - **SGLD** — stochastic gradient Langevin dynamics, one independent
//!   chain per particle,
//! - **SGHMC** — stochastic gradient Hamiltonian Monte Carlo with a
//!   friction term and an auxiliary momentum block,
//! - **SVGD** — Stein variational gradient descent, deterministic
//!   kernelized particle transport,
//! - **PO-SG-MCMC** — particle optimization with the noisy Stein
//!   direction plus Polyak momentum on the previous displacement.
//!
//! Around them sit the supporting pieces: differentiable target models
//! ([`targets`]), RBF kernels with the median-heuristic bandwidth rule
//! ([`kernels`]), the kernelized Stein direction and discrepancy
//! ([`stein`]), distribution-approximation metrics ([`metrics`]), and an
//! independent 1-D Fokker-Planck / proximal (JKO-style) grid solver used
//! as a ground-truth oracle at desk scale ([`fpe`]).
//!
//! All stochastic code draws from counter-derived substreams keyed by
//! `(seed, iteration, particle)`, so a run is a pure function of its seed
//! regardless of evaluation order or thread count.
//!
//! The crate is `no_std`-compatible (with `alloc`); file formats, dataset
//! loaders and the CLI harness live in the companion `posteriorflow`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod fpe;
pub mod kernels;
pub mod metrics;
pub mod particles;
pub(crate) mod rng;
pub mod samplers;
pub mod stein;
pub mod targets;

pub use error::CoreError;
pub use particles::ParticleSet;
