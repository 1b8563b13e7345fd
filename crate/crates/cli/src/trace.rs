//! Trace CSV files and the run manifest. All files are written atomically
//! (temp + rename) so an interrupted run never leaves half-written output,
//! and all content is a pure function of the resolved configuration.

use std::path::{Path, PathBuf};

use posteriorflow_core::samplers::{RunTrace, SamplerKind};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::Result;

pub const TRACE_HEADER: &str = "iteration,metric,value";
pub const MANIFEST_NAME: &str = "manifest.txt";

/// Write `text` to `path` via a temp file in the same directory plus an
/// atomic rename.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = match path.file_name() {
        Some(name) => {
            let mut tmp_name = name.to_os_string();
            tmp_name.push(".tmp");
            path.with_file_name(tmp_name)
        }
        None => return Err(CliError::invalid(format!("not a file path: {}", path.display()))),
    };
    std::fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// `<sampler>_<seed>.csv`
pub fn trace_filename(kind: SamplerKind, seed: u64) -> String {
    format!("{}_{seed}.csv", kind.as_str())
}

/// Inverse of [`trace_filename`]; `None` for files that are not traces
/// (summaries, plot data, manifests).
pub fn parse_trace_filename(name: &str) -> Option<(String, u64)> {
    let stem = name.strip_suffix(".csv")?;
    let (sampler, seed) = stem.rsplit_once('_')?;
    if sampler.is_empty() {
        return None;
    }
    Some((sampler.to_string(), seed.parse().ok()?))
}

/// Render a run trace as CSV: the mandatory header plus one
/// `iteration,metric,value` row per record, in recording order. Values use
/// Rust's shortest round-trip float formatting, so equal runs yield
/// byte-identical files.
pub fn render_trace(trace: &RunTrace) -> String {
    let mut text = String::from(TRACE_HEADER);
    text.push('\n');
    for rec in &trace.records {
        text.push_str(&format!("{},{},{}\n", rec.iteration, rec.metric, rec.value));
    }
    text
}

/// Write one trace into `outdir` under its canonical filename.
pub fn write_trace(outdir: &Path, trace: &RunTrace) -> Result<PathBuf> {
    let path = outdir.join(trace_filename(trace.sampler, trace.seed));
    write_atomic(&path, &render_trace(trace))?;
    Ok(path)
}

/// A trace file read back for comparison.
#[derive(Debug, Clone)]
pub struct ParsedTrace {
    pub sampler: String,
    pub seed: u64,
    /// `(iteration, metric, value)` rows in file order.
    pub rows: Vec<(u64, String, f64)>,
}

pub fn read_trace(path: &Path) -> Result<ParsedTrace> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::invalid(format!("not a trace path: {}", path.display())))?;
    let (sampler, seed) = parse_trace_filename(name)
        .ok_or_else(|| CliError::invalid(format!("not a trace filename: {name}")))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let loc = |line: usize, message: String| CliError::Config {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TRACE_HEADER => {}
        other => {
            return Err(loc(
                1,
                format!("expected header `{TRACE_HEADER}`, found `{}`", other.map(|(_, h)| h).unwrap_or("")),
            ))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut cells = line.splitn(3, ',');
        let (it, metric, value) = match (cells.next(), cells.next(), cells.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(loc(idx + 1, format!("expected 3 columns, found `{line}`"))),
        };
        let iteration: u64 = it
            .parse()
            .map_err(|_| loc(idx + 1, format!("unparseable iteration `{it}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| loc(idx + 1, format!("unparseable value `{value}`")))?;
        rows.push((iteration, metric.to_string(), value));
    }
    Ok(ParsedTrace {
        sampler,
        seed,
        rows,
    })
}

/// Write `<outdir>/manifest.txt` with the resolved configuration.
pub fn write_manifest(outdir: &Path, config: &ExperimentConfig) -> Result<PathBuf> {
    let path = outdir.join(MANIFEST_NAME);
    let mut text = config.manifest_lines().join("\n");
    text.push('\n');
    write_atomic(&path, &text)?;
    Ok(path)
}
