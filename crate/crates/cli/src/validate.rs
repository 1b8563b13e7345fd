//! Named validation suites: independent numerical oracles (finite
//! differences, PDE solves, a from-scratch momentum-SVGD) run against the
//! library, printed as per-check pass/fail lines by `validate`.

use posteriorflow_core::fpe::{
    fp_solve_1d, jko_step_1d, langevin_spec, tv_distance, DiffusionSpec, Grid1D, GridDensity,
};
use posteriorflow_core::metrics::{jsd_discrete, kl_discrete, DiscreteDist};
use posteriorflow_core::samplers::{
    init_particles, po_sgmcmc_step, svgd_step, InitSpec, SamplerConfig,
};
use posteriorflow_core::targets::{
    DiagGaussian, DoubleWell, GaussianMixture, LogisticRegression, TargetModel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::data::synth_logistic;
use crate::error::CliError;
use crate::Result;

pub const SUITES: [&str; 5] = ["gradcheck", "fpe", "jko", "momentum-equivalence", "lemma2"];

/// Outcome of one validation check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn bound(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            passed: value <= bound,
            detail: format!("{value:.3e} (bound {bound:.1e})"),
        }
    }
}

/// Run a named suite; unknown names list the valid ones.
pub fn run_suite(name: &str) -> Result<Vec<Check>> {
    match name {
        "gradcheck" => gradcheck_suite(),
        "fpe" => fpe_suite(),
        "jko" => jko_suite(),
        "momentum-equivalence" => momentum_equivalence_suite(),
        "lemma2" => lemma2_suite(),
        _ => Err(CliError::invalid(format!(
            "unknown suite `{name}` (expected one of: {})",
            SUITES.join(", ")
        ))),
    }
}

// ---------------------------------------------------------------- gradcheck

/// Worst relative error of the analytic gradient against central finite
/// differences of the log density over seeded sample points.
fn fd_max_rel_err(model: &dyn TargetModel, points: usize, scale: f64, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = model.dim();
    let mut worst = 0.0f64;
    for _ in 0..points {
        let theta: Vec<f64> = (0..d)
            .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let grad = model.grad_log_density(&theta)?;
        for c in 0..d {
            let eps = 1e-4 * theta[c].abs().max(1.0);
            let mut plus = theta.clone();
            plus[c] += eps;
            let mut minus = theta.clone();
            minus[c] -= eps;
            let fd = (model.log_unnorm_density(&plus)? - model.log_unnorm_density(&minus)?)
                / (2.0 * eps);
            let err = (fd - grad[c]).abs() / grad[c].abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// Exact minibatch unbiasedness: the average of the scaled stochastic
/// gradient over every size-2 batch of a 6-row dataset equals the full
/// gradient.
fn exhaustive_unbiasedness() -> Result<f64> {
    let data = synth_logistic(8, 2, 13)?.train; // 8 × 0.8 = 6 training rows
    assert_eq!(data.len(), 6);
    let model = LogisticRegression::new(data, 0.01)?;
    let theta = [0.4, -0.9];
    let full = model.grad_log_density(&theta)?;
    let mut mean = vec![0.0; 2];
    let mut count = 0.0;
    for i in 0..6 {
        for j in (i + 1)..6 {
            let g = model.stochastic_grad(&theta, &[i, j])?;
            for c in 0..2 {
                mean[c] += g[c];
            }
            count += 1.0;
        }
    }
    let worst = full
        .iter()
        .zip(&mean)
        .map(|(f, m)| (m / count - f).abs())
        .fold(0.0f64, f64::max);
    Ok(worst)
}

pub fn gradcheck_suite() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let gaussian = DiagGaussian::new(vec![0.3, -1.2, 0.7], vec![0.5, 2.0, 1.3])?;
    checks.push(Check::bound(
        "gaussian-fd",
        fd_max_rel_err(&gaussian, 100, 1.5, 101)?,
        1e-5,
    ));
    let mixture = GaussianMixture::new(
        vec![0.3, 0.7],
        vec![vec![-2.0, 0.5], vec![1.5, -0.5]],
        vec![vec![1.0, 0.8], vec![0.6, 1.4]],
    )?;
    checks.push(Check::bound(
        "mixture-fd",
        fd_max_rel_err(&mixture, 100, 2.0, 102)?,
        1e-5,
    ));
    checks.push(Check::bound(
        "double-well-fd",
        fd_max_rel_err(&DoubleWell, 100, 1.5, 103)?,
        1e-5,
    ));
    let logistic = LogisticRegression::new(synth_logistic(50, 3, 11)?.train, 0.01)?;
    checks.push(Check::bound(
        "logistic-fd",
        fd_max_rel_err(&logistic, 100, 1.0, 104)?,
        1e-5,
    ));
    checks.push(Check::bound(
        "minibatch-unbiasedness",
        exhaustive_unbiasedness()?,
        1e-12,
    ));
    Ok(checks)
}

// --------------------------------------------------------------------- fpe

fn stable_dt(grid: &Grid1D, diffusion: f64, drift_max: f64) -> f64 {
    let dx = grid.dx();
    0.9 * dx * dx / (2.0 * diffusion + drift_max * dx)
}

pub fn fpe_suite() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    // free diffusion: variance grows by 2Dt
    let grid = Grid1D::new(-8.0, 8.0, 400)?;
    let init = GridDensity::from_fn(grid.clone(), |x| (-x * x).exp())?; // N(0, 1/2)
    let spec = DiffusionSpec::new(|_| 0.0, 1.0)?;
    let out = fp_solve_1d(&spec, &init, 0.5, stable_dt(&grid, 1.0, 0.0))?;
    let rel = (out.variance() - 1.5).abs() / 1.5;
    checks.push(Check::bound("diffusion-variance-growth", rel, 0.02));

    // Ornstein–Uhlenbeck: the standard normal is stationary
    let grid = Grid1D::new(-6.0, 6.0, 2560)?;
    let init = GridDensity::from_fn(grid.clone(), |x| (-0.5 * x * x).exp())?;
    let spec = langevin_spec(|x: f64| -x);
    let out = fp_solve_1d(&spec, &init, 1.0, stable_dt(&grid, 1.0, 6.0))?;
    checks.push(Check::bound(
        "ou-stationarity-tv",
        tv_distance(&init, &out)?,
        1e-3,
    ));

    // double-well: relaxation to the Gibbs density from a lopsided start
    let grid = Grid1D::new(-3.0, 3.0, 512)?;
    let gibbs = GridDensity::from_fn(grid.clone(), |x| {
        let w = x * x - 1.0;
        (-w * w / 4.0).exp()
    })?;
    let init = GridDensity::from_fn(grid.clone(), |x| (-(x - 1.5) * (x - 1.5) / 0.08).exp())?;
    let spec = langevin_spec(|x: f64| x - x * x * x);
    let out = fp_solve_1d(&spec, &init, 8.0, stable_dt(&grid, 1.0, 24.0))?;
    checks.push(Check::bound(
        "double-well-relaxation-tv",
        tv_distance(&gibbs, &out)?,
        0.02,
    ));
    Ok(checks)
}

// --------------------------------------------------------------------- jko

pub fn jko_suite() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let grid = Grid1D::new(-5.0, 5.0, 128)?;
    let prev = GridDensity::from_fn(grid.clone(), |x| (-(x - 1.0) * (x - 1.0) / 0.5).exp())?;
    let logp: Vec<f64> = (0..grid.cells()).map(|i| -0.5 * grid.center(i) * grid.center(i)).collect();
    let target = GridDensity::from_fn(grid.clone(), |x| (-0.5 * x * x).exp())?;

    let big = jko_step_1d(&prev, &logp, 1e6)?;
    checks.push(Check::bound(
        "large-step-reaches-target",
        tv_distance(&big, &target)?,
        1e-3,
    ));
    let small = jko_step_1d(&prev, &logp, 1e-8)?;
    checks.push(Check::bound(
        "small-step-stays-put",
        tv_distance(&small, &prev)?,
        1e-3,
    ));

    // chains of proximal steps track the Fokker–Planck flow on the
    // Ornstein–Uhlenbeck spec, and the gap shrinks monotonically with the
    // stepsize at a matched horizon
    let grid = Grid1D::new(-5.0, 5.0, 256)?;
    let init = GridDensity::from_fn(grid.clone(), |x| (-(x - 1.5) * (x - 1.5) / 0.5).exp())?;
    let logp: Vec<f64> = (0..grid.cells()).map(|i| -0.5 * grid.center(i) * grid.center(i)).collect();
    let spec = langevin_spec(|x: f64| -x);
    let dt = stable_dt(&grid, 1.0, 5.0);

    let mut tvs = Vec::new();
    for &h in &[0.04f64, 0.02, 0.01] {
        let steps = (0.5 / h).round() as usize;
        let mut rho = init.clone();
        for _ in 0..steps {
            rho = jko_step_1d(&rho, &logp, h)?;
        }
        let pde = fp_solve_1d(&spec, &init, steps as f64 * h, dt)?;
        tvs.push(tv_distance(&rho, &pde)?);
    }
    checks.push(Check::bound("chain-tracks-flow-tv", tvs[2], 0.05));
    checks.push(Check {
        name: "error-monotone-in-stepsize".into(),
        passed: tvs[0] >= tvs[1] && tvs[1] >= tvs[2],
        detail: format!("TV(h=0.04)={:.3e} ≥ TV(h=0.02)={:.3e} ≥ TV(h=0.01)={:.3e}", tvs[0], tvs[1], tvs[2]),
    });
    Ok(checks)
}

// ------------------------------------------------- momentum equivalence

/// From-scratch Polyak-momentum SVGD used as the reference: explicit
/// double loops, its own median-heuristic bandwidth, no shared code with
/// the sampler under test.
struct ReferencePolyak {
    cur: Vec<Vec<f64>>,
    prev: Vec<Vec<f64>>,
    stepsize: f64,
    momentum: f64,
}

impl ReferencePolyak {
    fn step(&mut self, model: &dyn TargetModel) -> Result<()> {
        let m = self.cur.len();
        let d = self.cur[0].len();
        let mut dists = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                let sq: f64 = self.cur[i]
                    .iter()
                    .zip(&self.cur[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                dists.push(sq);
            }
        }
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med_sq = dists[(dists.len() - 1) / 2];
        let bw_sq = if med_sq == 0.0 {
            1.0
        } else {
            med_sq / ((m as f64) + 1.0).ln()
        };

        let grads: Vec<Vec<f64>> = self
            .cur
            .iter()
            .map(|x| model.grad_log_density(x))
            .collect::<core::result::Result<_, _>>()?;
        let mut next = vec![vec![0.0; d]; m];
        for i in 0..m {
            let mut phi = vec![0.0; d];
            for j in 0..m {
                let sq: f64 = self.cur[j]
                    .iter()
                    .zip(&self.cur[i])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let k = (-sq / bw_sq).exp();
                for c in 0..d {
                    phi[c] += k * grads[j][c] - 2.0 / bw_sq * (self.cur[j][c] - self.cur[i][c]) * k;
                }
            }
            for c in 0..d {
                next[i][c] = self.cur[i][c]
                    + self.stepsize * phi[c] / m as f64
                    + self.momentum * (self.cur[i][c] - self.prev[i][c]);
            }
        }
        self.prev = core::mem::replace(&mut self.cur, next);
        Ok(())
    }
}

pub fn momentum_equivalence_suite() -> Result<Vec<Check>> {
    let model = DiagGaussian::new(
        vec![0.5, -0.3, 1.0, 0.0, -1.2],
        vec![0.7, 1.5, 1.0, 2.0, 0.9],
    )?;
    let mut cfg = SamplerConfig {
        stepsize: 0.05,
        momentum: 0.25,
        noise_scale: 0.0,
        particles: 20,
        seed: 2024,
        ..SamplerConfig::default()
    };
    let mut state = init_particles(&cfg, &model, &InitSpec::Default)?;
    let mut reference = ReferencePolyak {
        cur: state.current.rows().map(|r| r.to_vec()).collect(),
        prev: state.current.rows().map(|r| r.to_vec()).collect(),
        stepsize: cfg.stepsize,
        momentum: cfg.momentum,
    };
    let mut worst = 0.0f64;
    for _ in 0..100 {
        po_sgmcmc_step(&mut state, &model, &cfg, &[])?;
        reference.step(&model)?;
        for (i, row) in reference.cur.iter().enumerate() {
            for (c, want) in row.iter().enumerate() {
                worst = worst.max((state.current.row(i)[c] - want).abs());
            }
        }
    }
    let mut checks = vec![Check::bound("matches-reference-polyak-svgd", worst, 1e-12)];

    // with σ₀ = 0 and μ = 0 the update degenerates to plain SVGD
    cfg.momentum = 0.0;
    let mut po = init_particles(&cfg, &model, &InitSpec::Default)?;
    let mut sv = init_particles(&cfg, &model, &InitSpec::Default)?;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        po_sgmcmc_step(&mut po, &model, &cfg, &[])?;
        svgd_step(&mut sv, &model, &cfg, &[])?;
        for (a, b) in po.current.as_slice().iter().zip(sv.current.as_slice()) {
            worst = worst.max((a - b).abs());
        }
    }
    checks.push(Check::bound("svgd-reduction", worst, 1e-15));
    Ok(checks)
}

// ------------------------------------------------------------------ lemma2

pub fn lemma2_suite() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let weight_dist = Uniform::new(0.01f64, 10.0).expect("static bounds");
    let draw = |rng: &mut ChaCha8Rng, dim: usize| -> Result<DiscreteDist> {
        let w: Vec<f64> = (0..dim).map(|_| weight_dist.sample(rng)).collect();
        Ok(DiscreteDist::from_weights(&w)?)
    };

    let mut worst_negative_kl = 0.0f64; // most negative KL/JSD seen
    let mut worst_jsd_excess = 0.0f64; // above 1
    let mut worst_self = 0.0f64; // divergence from itself
    let mut worst_zero_violation = f64::INFINITY; // smallest divergence among clearly distinct pairs
    let mut worst_convexity = 0.0f64; // lhs − rhs for joint convexity
    for trial in 0..1000 {
        let dim = 2 + (trial % 15);
        let p = draw(&mut rng, dim)?;
        let q = draw(&mut rng, dim)?;
        let p2 = draw(&mut rng, dim)?;
        let q2 = draw(&mut rng, dim)?;

        let kl = kl_discrete(&p, &q)?;
        let jsd = jsd_discrete(&p, &q)?;
        worst_negative_kl = worst_negative_kl.max(-kl).max(-jsd);
        worst_jsd_excess = worst_jsd_excess.max(jsd - 1.0);
        worst_self = worst_self
            .max(kl_discrete(&p, &p)?.abs())
            .max(jsd_discrete(&q, &q)?.abs());

        let l1: f64 = p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).sum();
        if l1 > 1e-3 {
            worst_zero_violation = worst_zero_violation.min(kl).min(jsd);
        }

        let mid = |a: &DiscreteDist, b: &DiscreteDist| -> Result<DiscreteDist> {
            let probs: Vec<f64> = a
                .probs()
                .iter()
                .zip(b.probs())
                .map(|(x, y)| 0.5 * (x + y))
                .collect();
            Ok(DiscreteDist::new(probs)?)
        };
        let pm = mid(&p, &p2)?;
        let qm = mid(&q, &q2)?;
        let kl_gap = kl_discrete(&pm, &qm)? - 0.5 * (kl + kl_discrete(&p2, &q2)?);
        let jsd_gap = jsd_discrete(&pm, &qm)? - 0.5 * (jsd + jsd_discrete(&p2, &q2)?);
        worst_convexity = worst_convexity.max(kl_gap).max(jsd_gap);
    }

    Ok(vec![
        Check::bound("nonnegativity", worst_negative_kl, 0.0),
        Check::bound("jsd-upper-bound", worst_jsd_excess, 1e-15),
        Check::bound("zero-on-equal", worst_self, 1e-12),
        Check {
            name: "positive-on-distinct".into(),
            passed: worst_zero_violation > 1e-12,
            detail: format!("min divergence {worst_zero_violation:.3e} (must exceed 1e-12)"),
        },
        Check::bound("midpoint-convexity", worst_convexity, 1e-12),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_all_pass(checks: &[Check]) {
        for c in checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn unknown_suite_lists_names() {
        let err = run_suite("nope").unwrap_err();
        let msg = err.to_string();
        for name in SUITES {
            assert!(msg.contains(name), "{msg}");
        }
    }

    #[test]
    fn gradcheck_suite_passes() {
        assert_all_pass(&run_suite("gradcheck").unwrap());
    }

    #[test]
    fn fpe_suite_passes() {
        assert_all_pass(&run_suite("fpe").unwrap());
    }

    #[test]
    fn jko_suite_passes() {
        assert_all_pass(&run_suite("jko").unwrap());
    }

    #[test]
    fn momentum_equivalence_suite_passes() {
        assert_all_pass(&run_suite("momentum-equivalence").unwrap());
    }

    #[test]
    fn lemma2_suite_passes() {
        assert_all_pass(&run_suite("lemma2").unwrap());
    }
}
