//! Cross-seed comparison: aggregate trace files into per-iteration
//! median/IQR tables and iterations-to-threshold statistics, written as
//! `summary.csv` plus one plot-data file per metric.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::config::{default_thresholds, ExperimentConfig, Threshold};
use crate::error::CliError;
use crate::trace::{read_trace, write_atomic, ParsedTrace, MANIFEST_NAME};
use crate::Result;

pub const SUMMARY_NAME: &str = "summary.csv";
pub const SUMMARY_HEADER: &str =
    "sampler,metric,iteration,median,q25,q75,threshold,iterations_to_threshold";
pub const PLOT_HEADER: &str = "sampler,iteration,median,q25,q75";

/// One aggregated `(sampler, metric, iteration)` row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sampler: String,
    pub metric: String,
    pub iteration: u64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    /// Rendered threshold (e.g. `>=0.73`) when one is configured for this
    /// metric.
    pub threshold: Option<String>,
    /// Median across seeds of the first hook iteration meeting the
    /// threshold; `-1` when the median seed never reaches it.
    pub iterations_to_threshold: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    /// Metric names in first-appearance order.
    pub metrics: Vec<String>,
}

/// Linear-interpolation quantile of pre-sorted values (the common
/// "type 7" rule; p = 0.5 gives the usual median).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Aggregate parsed traces. All traces must share the same
/// `(iteration, metric)` hook grid; seeds within a sampler must be unique.
pub fn summarize(traces: &[ParsedTrace], thresholds: &[Threshold]) -> Result<Summary> {
    if traces.is_empty() {
        return Err(CliError::invalid("no trace files to compare"));
    }
    let grid: Vec<(u64, String)> = traces[0]
        .rows
        .iter()
        .map(|(it, metric, _)| (*it, metric.clone()))
        .collect();
    for t in traces {
        let this: Vec<(u64, String)> =
            t.rows.iter().map(|(it, metric, _)| (*it, metric.clone())).collect();
        if this != grid {
            return Err(CliError::invalid(format!(
                "inconsistent hook grid: {}_{} disagrees with {}_{}",
                t.sampler, t.seed, traces[0].sampler, traces[0].seed
            )));
        }
    }

    // sampler → seed → row values (aligned with `grid`)
    let mut by_sampler: BTreeMap<&str, BTreeMap<u64, &ParsedTrace>> = BTreeMap::new();
    for t in traces {
        if by_sampler.entry(&t.sampler).or_default().insert(t.seed, t).is_some() {
            return Err(CliError::invalid(format!(
                "duplicate trace for sampler {} seed {}",
                t.sampler, t.seed
            )));
        }
    }

    let mut metrics: Vec<String> = Vec::new();
    for (_, metric) in &grid {
        if !metrics.contains(metric) {
            metrics.push(metric.clone());
        }
    }

    let mut rows = Vec::new();
    for (sampler, seeds) in &by_sampler {
        // iterations-to-threshold per (metric with a configured threshold)
        let mut iters_to: BTreeMap<&str, i64> = BTreeMap::new();
        for threshold in thresholds {
            if !metrics.iter().any(|m| m == &threshold.metric) {
                continue;
            }
            let mut per_seed: Vec<Option<u64>> = Vec::new();
            for trace in seeds.values() {
                let hit = trace
                    .rows
                    .iter()
                    .find(|(_, metric, value)| metric == &threshold.metric && threshold.met(*value))
                    .map(|(it, _, _)| *it);
                per_seed.push(hit);
            }
            // lower median with "never" sorting last
            per_seed.sort_by_key(|v| v.unwrap_or(u64::MAX));
            let median = per_seed[(per_seed.len() - 1) / 2];
            iters_to.insert(
                threshold.metric.as_str(),
                median.map(|v| v as i64).unwrap_or(-1),
            );
        }

        for (pos, (iteration, metric)) in grid.iter().enumerate() {
            let mut values: Vec<f64> = seeds.values().map(|t| t.rows[pos].2).collect();
            values.sort_by(|a, b| a.partial_cmp(b).expect("metric values must be comparable"));
            let threshold = thresholds.iter().find(|t| &t.metric == metric);
            rows.push(SummaryRow {
                sampler: sampler.to_string(),
                metric: metric.clone(),
                iteration: *iteration,
                median: quantile_sorted(&values, 0.5),
                q25: quantile_sorted(&values, 0.25),
                q75: quantile_sorted(&values, 0.75),
                threshold: threshold.map(|t| {
                    t.render().trim_start_matches(t.metric.as_str()).to_string()
                }),
                iterations_to_threshold: iters_to.get(metric.as_str()).copied(),
            });
        }
    }
    Ok(Summary { rows, metrics })
}

pub fn render_summary(summary: &Summary) -> String {
    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for row in &summary.rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.sampler,
            row.metric,
            row.iteration,
            row.median,
            row.q25,
            row.q75,
            row.threshold.as_deref().unwrap_or(""),
            row.iterations_to_threshold.map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    text
}

fn render_plot(summary: &Summary, metric: &str) -> String {
    let mut text = String::from(PLOT_HEADER);
    text.push('\n');
    for row in summary.rows.iter().filter(|r| r.metric == metric) {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            row.sampler, row.iteration, row.median, row.q25, row.q75
        ));
    }
    text
}

/// Files produced by a comparison.
#[derive(Debug, Clone)]
pub struct CompareOutput {
    pub summary: PathBuf,
    pub plots: Vec<PathBuf>,
}

/// Read every trace in `dir`, aggregate, and write `summary.csv` and
/// `plot_<metric>.csv` next to them. Thresholds come from the run manifest
/// when present, else the defaults.
pub fn compare_dir(dir: &Path) -> Result<CompareOutput> {
    let manifest = dir.join(MANIFEST_NAME);
    let thresholds = if manifest.exists() {
        ExperimentConfig::load(&manifest)?.thresholds
    } else {
        default_thresholds()
    };

    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|entry| entry.ok()?.file_name().into_string().ok())
        .filter(|name| crate::trace::parse_trace_filename(name).is_some())
        .collect();
    names.sort();
    let traces: Vec<ParsedTrace> = names
        .iter()
        .map(|name| read_trace(&dir.join(name)))
        .collect::<Result<_>>()?;

    let summary = summarize(&traces, &thresholds)?;
    let summary_path = dir.join(SUMMARY_NAME);
    write_atomic(&summary_path, &render_summary(&summary))?;
    let mut plots = Vec::new();
    for metric in &summary.metrics {
        let path = dir.join(format!("plot_{metric}.csv"));
        write_atomic(&path, &render_plot(&summary, metric))?;
        plots.push(path);
    }
    Ok(CompareOutput {
        summary: summary_path,
        plots,
    })
}
