//! Experiment configuration: a flat `key = value` text format with dotted
//! section names (`sampler.svgd.stepsize = 0.05`), parsed with per-line
//! diagnostics and resolved against defaults into a fully materialized
//! [`ExperimentConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use posteriorflow_core::samplers::{SamplerConfig, SamplerKind};
use posteriorflow_core::targets::{
    Dataset, DiagGaussian, DoubleWell, GaussianMixture, LogisticRegression, TargetModel,
    DEFAULT_PRIOR_PRECISION,
};

use crate::data;
use crate::error::CliError;
use crate::Result;

/// Raw `key → (value, line)` map preserving source locations for
/// diagnostics. Keys are unique; a duplicate is a parse error.
#[derive(Debug, Clone)]
pub struct RawConfig {
    path: String,
    entries: BTreeMap<String, (String, usize)>,
    /// Line of every key ever seen, surviving `take` so later diagnostics
    /// can still point at the source.
    lines: BTreeMap<String, usize>,
}

impl RawConfig {
    /// Parse `text`, ignoring blank lines and `#` comments. Each remaining
    /// line must be `key = value` with a nonempty dotted key.
    pub fn parse(path: &str, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| CliError::Config {
                path: path.into(),
                line,
                message: format!("expected `key = value`, found `{stripped}`"),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config {
                    path: path.into(),
                    line,
                    message: "empty key".into(),
                });
            }
            if entries.insert(key.clone(), (value, line)).is_some() {
                return Err(CliError::Config {
                    path: path.into(),
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        let lines = entries.iter().map(|(k, (_, l))| (k.clone(), *l)).collect();
        Ok(Self {
            path: path.into(),
            entries,
            lines,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&path.display().to_string(), &text)
    }

    fn err(&self, key: &str, message: impl Into<String>) -> CliError {
        let line = self.lines.get(key).copied().unwrap_or(0);
        CliError::Config {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str, value: &str, what: &str) -> Result<T> {
        value
            .parse::<T>()
            .map_err(|_| self.err(key, format!("`{key}` must be {what}, found `{value}`")))
    }
}

/// Which posterior the experiment samples from.
#[derive(Debug, Clone)]
pub enum TargetSpec {
    Gaussian { mean: Vec<f64>, var: Vec<f64> },
    Mixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        vars: Vec<Vec<f64>>,
    },
    DoubleWell,
    Logistic {
        dataset: PathBuf,
        test_dataset: Option<PathBuf>,
        prior_precision: f64,
    },
}

/// A target spec materialized into a model (datasets loaded).
pub enum BuiltTarget {
    Gaussian(DiagGaussian),
    Mixture(GaussianMixture),
    DoubleWell(DoubleWell),
    Logistic {
        model: LogisticRegression,
        test: Option<Dataset>,
    },
}

impl BuiltTarget {
    pub fn model(&self) -> &dyn TargetModel {
        match self {
            BuiltTarget::Gaussian(m) => m,
            BuiltTarget::Mixture(m) => m,
            BuiltTarget::DoubleWell(m) => m,
            BuiltTarget::Logistic { model, .. } => model,
        }
    }
}

impl TargetSpec {
    pub fn build(&self) -> Result<BuiltTarget> {
        match self {
            TargetSpec::Gaussian { mean, var } => Ok(BuiltTarget::Gaussian(DiagGaussian::new(
                mean.clone(),
                var.clone(),
            )?)),
            TargetSpec::Mixture {
                weights,
                means,
                vars,
            } => Ok(BuiltTarget::Mixture(GaussianMixture::new(
                weights.clone(),
                means.clone(),
                vars.clone(),
            )?)),
            TargetSpec::DoubleWell => Ok(BuiltTarget::DoubleWell(DoubleWell)),
            TargetSpec::Logistic {
                dataset,
                test_dataset,
                prior_precision,
            } => {
                let train = data::load_dataset(dataset)?;
                let test = test_dataset.as_ref().map(|p| data::load_dataset(p)).transpose()?;
                Ok(BuiltTarget::Logistic {
                    model: LogisticRegression::new(train, *prior_precision)?,
                    test,
                })
            }
        }
    }
}

/// Trace metrics the run loop can record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Posterior-predictive test accuracy (logistic targets with a test set).
    Accuracy,
    /// Mean posterior-predictive test log-likelihood (same requirement).
    LogLikelihood,
    /// Kernelized Stein discrepancy of the particles against the target.
    Ksd,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::LogLikelihood => "log_likelihood",
            MetricKind::Ksd => "ksd",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "accuracy" => Some(MetricKind::Accuracy),
            "log_likelihood" => Some(MetricKind::LogLikelihood),
            "ksd" => Some(MetricKind::Ksd),
            _ => None,
        }
    }
}

/// Direction of an iterations-to-threshold crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdOp {
    /// Reached once the metric is `≥ value` (accuracies, log-likelihoods).
    AtLeast,
    /// Reached once the metric is `≤ value` (discrepancies).
    AtMost,
}

/// `metric>=value` / `metric<=value` threshold for cmd_compare.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub metric: String,
    pub op: ThresholdOp,
    pub value: f64,
}

impl Threshold {
    pub fn parse(text: &str) -> Option<Self> {
        let (metric, op, value) = if let Some((m, v)) = text.split_once(">=") {
            (m, ThresholdOp::AtLeast, v)
        } else if let Some((m, v)) = text.split_once("<=") {
            (m, ThresholdOp::AtMost, v)
        } else {
            return None;
        };
        let metric = metric.trim();
        if metric.is_empty() {
            return None;
        }
        Some(Threshold {
            metric: metric.to_string(),
            op,
            value: value.trim().parse().ok()?,
        })
    }

    pub fn met(&self, value: f64) -> bool {
        match self.op {
            ThresholdOp::AtLeast => value >= self.value,
            ThresholdOp::AtMost => value <= self.value,
        }
    }

    pub fn render(&self) -> String {
        let op = match self.op {
            ThresholdOp::AtLeast => ">=",
            ThresholdOp::AtMost => "<=",
        };
        format!("{}{}{}", self.metric, op, self.value)
    }
}

/// Default compare threshold: accuracy 0.73 on the synthetic logistic task.
pub fn default_thresholds() -> Vec<Threshold> {
    vec![Threshold {
        metric: "accuracy".into(),
        op: ThresholdOp::AtLeast,
        value: 0.73,
    }]
}

/// Fully resolved experiment: target, sampler grid, budget, and outputs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    /// Samplers to run, each with its resolved hyperparameters (the seed
    /// field is overwritten per run).
    pub samplers: Vec<(SamplerKind, SamplerConfig)>,
    pub iterations: u64,
    pub hook_period: u64,
    pub seeds: Vec<u64>,
    pub outdir: PathBuf,
    pub metrics: Vec<MetricKind>,
    pub thresholds: Vec<Threshold>,
}

const SAMPLER_FIELDS: [&str; 7] = [
    "stepsize",
    "momentum",
    "noise_scale",
    "noise_decay",
    "friction",
    "batch_size",
    "particles",
];

fn split_list(raw: &str) -> Vec<&str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_raw(RawConfig::load(path)?)
    }

    pub fn from_raw(mut raw: RawConfig) -> Result<Self> {
        let target = Self::resolve_target(&mut raw)?;

        let sampler_list = raw
            .take("run.samplers")
            .ok_or_else(|| raw.err("run.samplers", "missing required key `run.samplers`"))?;
        let mut kinds = Vec::new();
        for name in split_list(&sampler_list) {
            let kind = SamplerKind::parse(name).ok_or_else(|| {
                raw.err(
                    "run.samplers",
                    format!("unknown sampler `{name}` (expected sgld, sghmc, svgd, po_sgmcmc)"),
                )
            })?;
            if kinds.contains(&kind) {
                return Err(raw.err("run.samplers", format!("sampler `{name}` listed twice")));
            }
            kinds.push(kind);
        }
        if kinds.is_empty() {
            return Err(raw.err("run.samplers", "at least one sampler is required"));
        }

        let iterations = match raw.take("run.iterations") {
            Some(v) => raw.parse_as::<u64>("run.iterations", &v, "a nonnegative integer")?,
            None => return Err(raw.err("run.iterations", "missing required key `run.iterations`")),
        };
        let hook_period = match raw.take("run.hook_period") {
            Some(v) => {
                let p = raw.parse_as::<u64>("run.hook_period", &v, "a positive integer")?;
                if p == 0 {
                    return Err(raw.err("run.hook_period", "`run.hook_period` must be positive"));
                }
                p
            }
            None => 10,
        };

        let seeds_raw = raw
            .take("run.seeds")
            .ok_or_else(|| raw.err("run.seeds", "missing required key `run.seeds`"))?;
        let mut seeds = Vec::new();
        for s in split_list(&seeds_raw) {
            let seed = raw.parse_as::<u64>("run.seeds", s, "a list of integers")?;
            if seeds.contains(&seed) {
                return Err(raw.err("run.seeds", format!("seed {seed} listed twice")));
            }
            seeds.push(seed);
        }
        if seeds.is_empty() {
            return Err(raw.err("run.seeds", "at least one seed is required"));
        }

        let outdir = PathBuf::from(
            raw.take("run.outdir")
                .ok_or_else(|| raw.err("run.outdir", "missing required key `run.outdir`"))?,
        );

        let metrics = match raw.take("run.metrics") {
            Some(list) => {
                let mut metrics = Vec::new();
                for name in split_list(&list) {
                    let m = MetricKind::parse(name).ok_or_else(|| {
                        raw.err(
                            "run.metrics",
                            format!("unknown metric `{name}` (expected accuracy, log_likelihood, ksd)"),
                        )
                    })?;
                    if metrics.contains(&m) {
                        return Err(raw.err("run.metrics", format!("metric `{name}` listed twice")));
                    }
                    metrics.push(m);
                }
                metrics
            }
            None => match &target {
                TargetSpec::Logistic {
                    test_dataset: Some(_),
                    ..
                } => vec![MetricKind::Accuracy, MetricKind::LogLikelihood],
                _ => vec![MetricKind::Ksd],
            },
        };
        let needs_test = metrics
            .iter()
            .any(|m| matches!(m, MetricKind::Accuracy | MetricKind::LogLikelihood));
        if needs_test
            && !matches!(
                target,
                TargetSpec::Logistic {
                    test_dataset: Some(_),
                    ..
                }
            )
        {
            return Err(raw.err(
                "run.metrics",
                "accuracy/log_likelihood metrics need a logistic target with `target.test_dataset`",
            ));
        }

        let thresholds = match raw.take("compare.thresholds") {
            Some(list) => {
                let mut out = Vec::new();
                for item in split_list(&list) {
                    let t = Threshold::parse(item).ok_or_else(|| {
                        raw.err(
                            "compare.thresholds",
                            format!("expected `metric>=value` or `metric<=value`, found `{item}`"),
                        )
                    })?;
                    out.push(t);
                }
                out
            }
            None => default_thresholds(),
        };

        let samplers = Self::resolve_samplers(&mut raw, &kinds)?;

        if let Some((key, (_, line))) = raw.entries.iter().next() {
            return Err(CliError::Config {
                path: raw.path.clone(),
                line: *line,
                message: format!("unknown key `{key}`"),
            });
        }

        Ok(Self {
            target,
            samplers,
            iterations,
            hook_period,
            seeds,
            outdir,
            metrics,
            thresholds,
        })
    }

    fn resolve_target(raw: &mut RawConfig) -> Result<TargetSpec> {
        let kind = raw
            .take("target.kind")
            .ok_or_else(|| raw.err("target.kind", "missing required key `target.kind`"))?;
        let floats = |raw: &RawConfig, key: &str, value: &str| -> Result<Vec<f64>> {
            split_list(value)
                .iter()
                .map(|v| raw.parse_as::<f64>(key, v, "a list of numbers"))
                .collect()
        };
        match kind.as_str() {
            "gaussian" => {
                let mean_raw = raw
                    .take("target.mean")
                    .ok_or_else(|| raw.err("target.mean", "gaussian target needs `target.mean`"))?;
                let var_raw = raw
                    .take("target.var")
                    .ok_or_else(|| raw.err("target.var", "gaussian target needs `target.var`"))?;
                Ok(TargetSpec::Gaussian {
                    mean: floats(raw, "target.mean", &mean_raw)?,
                    var: floats(raw, "target.var", &var_raw)?,
                })
            }
            "mixture" => {
                // components separated by `|`, coordinates by `,`
                let weights_raw = raw.take("target.weights").ok_or_else(|| {
                    raw.err("target.weights", "mixture target needs `target.weights`")
                })?;
                let means_raw = raw
                    .take("target.means")
                    .ok_or_else(|| raw.err("target.means", "mixture target needs `target.means`"))?;
                let vars_raw = raw
                    .take("target.vars")
                    .ok_or_else(|| raw.err("target.vars", "mixture target needs `target.vars`"))?;
                let groups = |raw: &RawConfig, key: &str, value: &str| -> Result<Vec<Vec<f64>>> {
                    value
                        .split('|')
                        .map(|g| floats(raw, key, g))
                        .collect::<Result<Vec<_>>>()
                };
                Ok(TargetSpec::Mixture {
                    weights: floats(raw, "target.weights", &weights_raw)?,
                    means: groups(raw, "target.means", &means_raw)?,
                    vars: groups(raw, "target.vars", &vars_raw)?,
                })
            }
            "double_well" => Ok(TargetSpec::DoubleWell),
            "logistic" => {
                let dataset = PathBuf::from(raw.take("target.dataset").ok_or_else(|| {
                    raw.err("target.dataset", "logistic target needs `target.dataset`")
                })?);
                if !dataset.exists() {
                    return Err(raw.err(
                        "target.dataset",
                        format!("dataset file not found: {}", dataset.display()),
                    ));
                }
                let test_dataset = raw.take("target.test_dataset").map(PathBuf::from);
                if let Some(path) = &test_dataset {
                    if !path.exists() {
                        return Err(raw.err(
                            "target.test_dataset",
                            format!("dataset file not found: {}", path.display()),
                        ));
                    }
                }
                let prior_precision = match raw.take("target.prior_precision") {
                    Some(v) => {
                        raw.parse_as::<f64>("target.prior_precision", &v, "a nonnegative number")?
                    }
                    None => DEFAULT_PRIOR_PRECISION,
                };
                Ok(TargetSpec::Logistic {
                    dataset,
                    test_dataset,
                    prior_precision,
                })
            }
            other => Err(raw.err(
                "target.kind",
                format!("unknown target kind `{other}` (expected gaussian, mixture, double_well, logistic)"),
            )),
        }
    }

    fn resolve_samplers(
        raw: &mut RawConfig,
        kinds: &[SamplerKind],
    ) -> Result<Vec<(SamplerKind, SamplerConfig)>> {
        // global overrides `sampler.<field>` apply to every sampler
        let mut base = SamplerConfig::default();
        for field in SAMPLER_FIELDS {
            let key = format!("sampler.{field}");
            if let Some(value) = raw.take(&key) {
                apply_sampler_field(raw, &mut base, &key, field, &value)?;
            }
        }

        let mut out = Vec::new();
        for kind in kinds {
            let mut cfg = base.clone();
            for field in SAMPLER_FIELDS {
                let key = format!("sampler.{}.{field}", kind.as_str());
                if let Some(value) = raw.take(&key) {
                    apply_sampler_field(raw, &mut cfg, &key, field, &value)?;
                }
            }
            cfg.validate()?;
            out.push((*kind, cfg));
        }
        Ok(out)
    }

    /// The full resolved configuration as sorted `key = value` lines —
    /// the manifest body. Deterministic: no timestamps or environment
    /// values.
    pub fn manifest_lines(&self) -> Vec<String> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        match &self.target {
            TargetSpec::Gaussian { mean, var } => {
                map.insert("target.kind".into(), "gaussian".into());
                map.insert("target.mean".into(), join_floats(mean));
                map.insert("target.var".into(), join_floats(var));
            }
            TargetSpec::Mixture {
                weights,
                means,
                vars,
            } => {
                map.insert("target.kind".into(), "mixture".into());
                map.insert("target.weights".into(), join_floats(weights));
                map.insert("target.means".into(), join_groups(means));
                map.insert("target.vars".into(), join_groups(vars));
            }
            TargetSpec::DoubleWell => {
                map.insert("target.kind".into(), "double_well".into());
            }
            TargetSpec::Logistic {
                dataset,
                test_dataset,
                prior_precision,
            } => {
                map.insert("target.kind".into(), "logistic".into());
                map.insert("target.dataset".into(), dataset.display().to_string());
                if let Some(test) = test_dataset {
                    map.insert("target.test_dataset".into(), test.display().to_string());
                }
                map.insert("target.prior_precision".into(), prior_precision.to_string());
            }
        }
        map.insert("run.iterations".into(), self.iterations.to_string());
        map.insert("run.hook_period".into(), self.hook_period.to_string());
        map.insert(
            "run.seeds".into(),
            self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
        );
        map.insert("run.outdir".into(), self.outdir.display().to_string());
        map.insert(
            "run.samplers".into(),
            self.samplers
                .iter()
                .map(|(k, _)| k.as_str())
                .collect::<Vec<_>>()
                .join(","),
        );
        map.insert(
            "run.metrics".into(),
            self.metrics.iter().map(|m| m.name()).collect::<Vec<_>>().join(","),
        );
        map.insert(
            "compare.thresholds".into(),
            self.thresholds.iter().map(|t| t.render()).collect::<Vec<_>>().join(","),
        );
        for (kind, cfg) in &self.samplers {
            let prefix = format!("sampler.{}", kind.as_str());
            map.insert(format!("{prefix}.stepsize"), cfg.stepsize.to_string());
            map.insert(format!("{prefix}.momentum"), cfg.momentum.to_string());
            map.insert(format!("{prefix}.noise_scale"), cfg.noise_scale.to_string());
            map.insert(format!("{prefix}.noise_decay"), cfg.noise_decay.to_string());
            map.insert(format!("{prefix}.friction"), cfg.friction.to_string());
            map.insert(format!("{prefix}.batch_size"), cfg.batch_size.to_string());
            map.insert(format!("{prefix}.particles"), cfg.particles.to_string());
        }
        map.into_iter().map(|(k, v)| format!("{k} = {v}")).collect()
    }
}

fn raw_parse_f64(raw: &RawConfig, key: &str, value: &str) -> Result<f64> {
    raw.parse_as::<f64>(key, value, "a number")
}

fn apply_sampler_field(
    raw: &RawConfig,
    cfg: &mut SamplerConfig,
    key: &str,
    field: &str,
    value: &str,
) -> Result<()> {
    match field {
        "stepsize" => cfg.stepsize = raw_parse_f64(raw, key, value)?,
        "momentum" => cfg.momentum = raw_parse_f64(raw, key, value)?,
        "noise_scale" => cfg.noise_scale = raw_parse_f64(raw, key, value)?,
        "noise_decay" => cfg.noise_decay = raw_parse_f64(raw, key, value)?,
        "friction" => cfg.friction = raw_parse_f64(raw, key, value)?,
        "batch_size" => cfg.batch_size = raw.parse_as::<usize>(key, value, "a nonnegative integer")?,
        "particles" => cfg.particles = raw.parse_as::<usize>(key, value, "a positive integer")?,
        _ => return Err(raw.err(key, format!("unknown sampler field `{field}`"))),
    }
    Ok(())
}

fn join_floats(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn join_groups(groups: &[Vec<f64>]) -> String {
    groups.iter().map(|g| join_floats(g)).collect::<Vec<_>>().join("|")
}
