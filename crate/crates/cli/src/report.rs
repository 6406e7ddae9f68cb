//! Writing reports to disk: metric CSV, configuration echo, run summary,
//! one SVG per panel and a SHA-256 manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::experiments::ExperimentReport;
use crate::plot::render_svg;

pub const CSV_HEADER: &str = "step,oracle_calls,metric_name,value,chain_ensemble_size,seed";

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path relative to the output directory.
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// `sha256sum`-compatible listing.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{}  {}", e.sha256, e.path.display());
        }
        out
    }
}

/// One row per repetition, recorded step and metric.
pub fn metrics_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in &report.series {
        for i in 0..s.values.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.steps[i], s.oracle_calls[i], s.metric, s.values[i], s.ensemble_size, s.seed
            );
        }
    }
    out
}

/// Per curve and repetition: steps taken, kernel oracle calls per chain,
/// schedule gradients per chain and diverged chains.
pub fn runs_csv(report: &ExperimentReport) -> String {
    let mut out =
        String::from("label,repetition,steps,oracle_calls_min,oracle_calls_max,schedule_calls,diverged\n");
    for r in &report.runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.label, r.repetition, r.steps, r.oracle_calls_min, r.oracle_calls_max, r.schedule_calls, r.diverged
        );
    }
    out
}

fn write(dir: &Path, name: &str, contents: &str, entries: &mut Vec<ManifestEntry>) -> Result<(), OutputError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| OutputError::Io { path, source })?;
    entries.push(ManifestEntry {
        path: PathBuf::from(name),
        sha256: hex::encode(Sha256::digest(contents.as_bytes())),
        bytes: contents.len(),
    });
    Ok(())
}

/// Writes `report.csv`, `runs.csv`, `config.echo` and one SVG per plot into
/// `dir`, then `manifest.sha256` listing the others. Runtime is not written,
/// so the files are identical across reruns of the same configuration.
pub fn emit_outputs(report: &ExperimentReport, dir: &Path) -> Result<Manifest, OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut entries = Vec::new();
    write(dir, "report.csv", &metrics_csv(report), &mut entries)?;
    write(dir, "runs.csv", &runs_csv(report), &mut entries)?;
    write(dir, "config.echo", &report.config.to_toml()?, &mut entries)?;
    for plot in &report.plots {
        write(dir, &format!("{}.svg", plot.name), &render_svg(plot), &mut entries)?;
    }
    let manifest = Manifest {
        dir: dir.to_path_buf(),
        entries,
    };
    let path = dir.join("manifest.sha256");
    fs::write(&path, manifest.to_text()).map_err(|source| OutputError::Io { path, source })?;
    Ok(manifest)
}
