//! CSV tables and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bathdiff_core::experiments::{HeatmapResult, ScenarioResult};
use serde::Serialize;

use crate::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn dynamics_csv(r: &ScenarioResult) -> String {
    let mut out = String::from("t,n_fermion,n_spin");
    if r.me2.is_some() {
        out.push_str(",n_me2");
    }
    out.push('\n');
    for (i, t) in r.fermion.grid.times().enumerate() {
        let _ = write!(
            out,
            "{},{},{}",
            fmt_float(t),
            fmt_float(r.fermion.values[i]),
            fmt_float(r.spin.values[i])
        );
        if let Some(me2) = &r.me2 {
            let _ = write!(out, ",{}", fmt_float(me2.values[i]));
        }
        out.push('\n');
    }
    out
}

pub fn heatmap_csv(r: &HeatmapResult, with_me2: bool) -> String {
    let mut out = String::from("N_E,n_exc,delta_max");
    if with_me2 {
        out.push_str(",me2_gap");
    }
    out.push('\n');
    for row in &r.rows {
        let _ = write!(
            out,
            "{},{},{}",
            row.n_bath,
            row.n_exc,
            fmt_float(row.delta_max)
        );
        if with_me2 {
            let gap = row.me2_gap.map(fmt_float).unwrap_or_default();
            let _ = write!(out, ",{gap}");
        }
        out.push('\n');
    }
    out
}

/// Record of one CLI run, written as `manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize, D: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: C,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<PathBuf>,
    pub diagnostics: D,
}

/// Collects files written into one output directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn write_manifest<C: Serialize, D: Serialize>(
        &self,
        manifest: &RunManifest<C, D>,
    ) -> Result<PathBuf, CliError> {
        let path = self.root.join("manifest.json");
        let mut text = serde_json::to_string_pretty(manifest)
            .map_err(|e| CliError::Io(format!("cannot serialize manifest: {e}")))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
