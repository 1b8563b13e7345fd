//! Acceptance gate: one test per release criterion, each printing a
//! single `criterion NN <name>: PASS/FAIL` line (visible with
//! `cargo test --test acceptance -- --nocapture`).

use std::path::Path;
use std::process::Command;

use posteriorflow::compare::summarize;
use posteriorflow::config::{Threshold, ThresholdOp};
use posteriorflow::data::synth_logistic;
use posteriorflow::trace::ParsedTrace;
use posteriorflow::validate::{gradcheck_suite, jko_suite, lemma2_suite, momentum_equivalence_suite, Check};
use posteriorflow_core::fpe::{
    fp_solve_1d, histogram, langevin_spec, tv_distance, Grid1D, GridDensity,
};
use posteriorflow_core::metrics::{w2_exact_sorted_1d, w2_quadratic};
use posteriorflow_core::particles::ParticleSet;
use posteriorflow_core::samplers::{
    init_particles, run, sgld_step, InitSpec, MetricHook, RunOutcome, SamplerConfig, SamplerKind,
};
use posteriorflow_core::targets::{
    logistic_metrics, DiagGaussian, LogisticRegression, DEFAULT_PRIOR_PRECISION,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn report(number: u32, name: &str, passed: bool, detail: &str) {
    let status = if passed { "PASS" } else { "FAIL" };
    println!("criterion {number:02} {name}: {status}");
    assert!(passed, "criterion {number:02} {name}: {detail}");
}

fn named_check<'a>(checks: &'a [Check], name: &str) -> &'a Check {
    checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("missing check {name}"))
}

#[test]
fn c01_momentum_reference_equivalence() {
    let checks = momentum_equivalence_suite().unwrap();
    let check = named_check(&checks, "matches-reference-polyak-svgd");
    report(1, "momentum-reference-equivalence", check.passed, &check.detail);
}

#[test]
fn c02_svgd_reduction() {
    let checks = momentum_equivalence_suite().unwrap();
    let check = named_check(&checks, "svgd-reduction");
    report(2, "svgd-reduction", check.passed, &check.detail);
}

#[test]
fn c03_sgld_gaussian_variance() {
    // single chain on N(0,1), h = 1e-3, 2×10⁵ steps; the seed matches the
    // pilot-calibrated long-run check in the core crate
    let model = DiagGaussian::new(vec![0.0], vec![1.0]).unwrap();
    let cfg = SamplerConfig {
        stepsize: 1e-3,
        particles: 1,
        seed: 1,
        ..SamplerConfig::default()
    };
    let mut state = init_particles(&cfg, &model, &InitSpec::Default).unwrap();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let steps = 200_000u64;
    for _ in 0..steps {
        sgld_step(&mut state, &model, &cfg, &[]).unwrap();
        let v = state.current.row(0)[0];
        sum += v;
        sum_sq += v * v;
    }
    let n = steps as f64;
    let var = sum_sq / n - (sum / n) * (sum / n);
    report(
        3,
        "sgld-gaussian-variance",
        (0.9..=1.1).contains(&var),
        &format!("trajectory variance {var}"),
    );
}

/// Mass-conserving aggregation of a fine grid density onto a coarser grid
/// covering the same interval (`fine.cells` must be a multiple of `coarse`).
fn coarsen(fine: &GridDensity, coarse: &Grid1D) -> GridDensity {
    let block = fine.grid().cells() / coarse.cells();
    assert_eq!(block * coarse.cells(), fine.grid().cells());
    let masses = fine.masses();
    let values: Vec<f64> = (0..coarse.cells())
        .map(|i| masses[i * block..(i + 1) * block].iter().sum())
        .collect();
    GridDensity::from_unnormalized(coarse.clone(), values).unwrap()
}

#[test]
fn c04_sgld_double_well_vs_pde() {
    // pooled SGLD histogram: 1000 chains × 100 kept steps = 10⁵ samples
    let model = posteriorflow_core::targets::DoubleWell;
    let cfg = SamplerConfig {
        stepsize: 0.01,
        particles: 1000,
        seed: 4,
        ..SamplerConfig::default()
    };
    let mut state = init_particles(&cfg, &model, &InitSpec::Default).unwrap();
    for _ in 0..2000 {
        sgld_step(&mut state, &model, &cfg, &[]).unwrap();
    }
    let mut pooled = Vec::with_capacity(100_000);
    for _ in 0..100 {
        sgld_step(&mut state, &model, &cfg, &[]).unwrap();
        pooled.extend_from_slice(state.current.as_slice());
    }
    let samples = ParticleSet::from_flat(pooled.len(), 1, pooled).unwrap();
    let coarse = Grid1D::new(-3.0, 3.0, 32).unwrap();
    let (hist, _clipped) = histogram(&samples, &coarse).unwrap();

    // oracle: long-time Fokker–Planck solve on a fine grid, aggregated down
    let fine = Grid1D::new(-3.0, 3.0, 512).unwrap();
    let init = GridDensity::from_fn(fine.clone(), |x| (-0.5 * x * x).exp()).unwrap();
    let spec = langevin_spec(|x: f64| x - x * x * x);
    let dx = fine.dx();
    let dt = 0.9 * dx * dx / (2.0 + 24.0 * dx);
    let stationary = fp_solve_1d(&spec, &init, 12.0, dt).unwrap();
    let tv = tv_distance(&hist, &coarsen(&stationary, &coarse)).unwrap();
    report(
        4,
        "sgld-double-well-vs-pde",
        tv < 0.05,
        &format!("TV {tv:.4} (bound 0.05)"),
    );
}

#[test]
fn c05_jko_tracks_fokker_planck() {
    let checks = jko_suite().unwrap();
    let chain = named_check(&checks, "chain-tracks-flow-tv");
    let monotone = named_check(&checks, "error-monotone-in-stepsize");
    report(
        5,
        "jko-tracks-fokker-planck",
        chain.passed && monotone.passed,
        &format!("{} / {}", chain.detail, monotone.detail),
    );
}

#[test]
fn c06_divergence_properties() {
    let checks = lemma2_suite().unwrap();
    let passed = checks.iter().all(|c| c.passed);
    let detail: Vec<String> = checks.iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
    report(6, "divergence-properties", passed, &detail.join("; "));
}

#[test]
fn c07_wasserstein_surrogate_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_gap = 0.0f64; // exact − surrogate (positive would violate the bound)
    for _ in 0..500 {
        let m = rng.random_range(2..40);
        let scale: f64 = rng.random_range(0.1..3.0);
        let shift: f64 = rng.random_range(-2.0..2.0);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..m)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    shift + scale * z
                })
                .collect()
        };
        let prev = ParticleSet::from_flat(m, 1, draw(&mut rng)).unwrap();
        let cur = ParticleSet::from_flat(m, 1, draw(&mut rng)).unwrap();
        let surrogate = w2_quadratic(&prev, &cur).unwrap();
        let exact = w2_exact_sorted_1d(&prev, &cur).unwrap();
        worst_gap = worst_gap.max(exact - surrogate);
    }

    // equality under an index-wise constant shift of sorted inputs, where
    // the identity coupling is the monotone (optimal) one
    let mut worst_eq = 0.0f64;
    for trial in 0..50 {
        let m = 3 + trial % 17;
        let mut base: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        base.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let c: f64 = rng.random_range(-1.5..1.5);
        let shifted: Vec<f64> = base.iter().map(|x| x + c).collect();
        let prev = ParticleSet::from_flat(m, 1, base).unwrap();
        let cur = ParticleSet::from_flat(m, 1, shifted).unwrap();
        let surrogate = w2_quadratic(&prev, &cur).unwrap();
        let exact = w2_exact_sorted_1d(&prev, &cur).unwrap();
        worst_eq = worst_eq.max((surrogate - exact).abs());
    }
    report(
        7,
        "wasserstein-surrogate-bound",
        worst_gap <= 1e-12 && worst_eq <= 1e-12,
        &format!("max bound violation {worst_gap:.3e}, max equality gap {worst_eq:.3e}"),
    );
}

#[test]
fn c08_logistic_benchmark_ordering() {
    let synth = synth_logistic(1000, 10, 5).unwrap();
    let model = LogisticRegression::new(synth.train, DEFAULT_PRIOR_PRECISION).unwrap();
    let test = synth.test;
    let budget = 400u64;
    let hook_period = 5u64;
    let stepsize = 1e-3;

    let threshold = Threshold {
        metric: "accuracy".into(),
        op: ThresholdOp::AtLeast,
        value: 0.73,
    };
    let mut traces = Vec::new();
    for kind in [SamplerKind::PoSgmcmc, SamplerKind::Svgd] {
        for seed in 1..=10u64 {
            let cfg = SamplerConfig {
                stepsize,
                momentum: if kind == SamplerKind::PoSgmcmc { 0.1 } else { 0.0 },
                noise_scale: if kind == SamplerKind::PoSgmcmc { 0.1 } else { 0.0 },
                batch_size: 32,
                particles: 20,
                seed,
                ..SamplerConfig::default()
            };
            let mut hooks = vec![MetricHook::new("accuracy", |state| {
                logistic_metrics(&model, &state.current, &test)
                    .map(|(accuracy, _)| accuracy)
                    .unwrap_or(f64::NAN)
            })];
            let trace = run(
                kind,
                &model,
                &cfg,
                &InitSpec::Default,
                budget,
                hook_period,
                &mut hooks,
                &mut || 0.0,
            )
            .unwrap();
            assert_eq!(trace.outcome, RunOutcome::Completed);
            traces.push(ParsedTrace {
                sampler: kind.as_str().to_string(),
                seed,
                rows: trace
                    .records
                    .iter()
                    .map(|r| (r.iteration, r.metric.to_string(), r.value))
                    .collect(),
            });
        }
    }
    let summary = summarize(&traces, &[threshold]).unwrap();
    let median_for = |sampler: &str| -> i64 {
        summary
            .rows
            .iter()
            .find(|r| r.sampler == sampler && r.metric == "accuracy")
            .and_then(|r| r.iterations_to_threshold)
            .expect("threshold column present")
    };
    let po = median_for("po_sgmcmc");
    let svgd = median_for("svgd");
    let both_reach = po > 0 && svgd > 0;
    report(
        8,
        "logistic-benchmark-ordering",
        both_reach && po <= svgd,
        &format!("median iterations to 0.73 accuracy: po_sgmcmc {po}, svgd {svgd}"),
    );
}

#[test]
fn c09_gradient_checks() {
    let checks = gradcheck_suite().unwrap();
    let passed = checks.iter().all(|c| c.passed);
    let detail: Vec<String> = checks.iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
    report(9, "gradient-checks", passed, &detail.join("; "));
}

#[test]
fn c10_run_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let trace_bytes = |outdir: &Path, threads: Option<&str>| -> Vec<(String, Vec<u8>)> {
        let config = outdir.with_extension("txt");
        std::fs::write(
            &config,
            format!(
                "target.kind = mixture\n\
                 target.weights = 0.3, 0.7\n\
                 target.means = -1.0, 0.0 | 1.5, 0.5\n\
                 target.vars = 1.0, 0.5 | 0.8, 1.2\n\
                 run.iterations = 30\n\
                 run.hook_period = 10\n\
                 run.seeds = 1, 2\n\
                 run.samplers = sgld, sghmc, svgd, po_sgmcmc\n\
                 sampler.particles = 6\n\
                 sampler.stepsize = 0.01\n\
                 run.outdir = {}\n",
                outdir.display()
            ),
        )
        .unwrap();
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_posteriorflow"));
        cmd.arg("run").arg(&config).env_remove("POSTERIORFLOW_THREADS");
        if let Some(t) = threads {
            cmd.env("POSTERIORFLOW_THREADS", t);
        }
        let out = cmd.output().expect("binary runs");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let mut names: Vec<String> = std::fs::read_dir(outdir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n.ends_with(".csv"))
            .collect();
        names.sort();
        assert_eq!(names.len(), 8);
        names
            .into_iter()
            .map(|n| {
                let b = std::fs::read(outdir.join(&n)).unwrap();
                (n, b)
            })
            .collect()
    };
    let first = trace_bytes(&dir.path().join("a"), None);
    let repeat = trace_bytes(&dir.path().join("b"), None);
    let serial = trace_bytes(&dir.path().join("c"), Some("1"));
    let parallel = trace_bytes(&dir.path().join("d"), Some("4"));
    let identical = first == repeat && first == serial && first == parallel;
    report(
        10,
        "run-determinism",
        identical,
        "trace CSVs differ across repeated runs or thread counts",
    );
}
