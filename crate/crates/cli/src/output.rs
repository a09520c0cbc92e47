use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ncp_core::dynamics::{IntegrationStats, ModelDescriptor};
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::CliError;

/// Sidecar written next to every output file.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a RunConfig,
    pub model: Option<&'a ModelDescriptor>,
    pub time_unit: Option<&'a str>,
    pub wall_time_s: f64,
    pub stats: IntegrationStats,
    pub warnings: &'a [String],
    /// Command-specific extras (refinement history, grid shape, …).
    pub details: Value,
}

/// Collects what goes into the manifest while a command runs.
pub struct Run<'a> {
    pub command: &'static str,
    pub cfg: &'a RunConfig,
    pub model: Option<ModelDescriptor>,
    pub stats: IntegrationStats,
    pub warnings: Vec<String>,
    pub details: Value,
    started: Instant,
}

impl<'a> Run<'a> {
    pub fn new(command: &'static str, cfg: &'a RunConfig) -> Self {
        Self {
            command,
            cfg,
            model: None,
            stats: IntegrationStats::default(),
            warnings: Vec::new(),
            details: Value::Null,
            started: Instant::now(),
        }
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    /// Writes `body` to the configured output (stdout if none) and, for
    /// files, the manifest beside it.
    pub fn emit(&self, body: &str) -> Result<(), CliError> {
        let Some(out) = &self.cfg.out else {
            let mut stdout = std::io::stdout().lock();
            return stdout.write_all(body.as_bytes()).map_err(|e| io_err("stdout", e));
        };
        std::fs::write(out, body).map_err(|e| io_err(out, e))?;
        let manifest = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            config: self.cfg,
            model: self.model.as_ref(),
            time_unit: self.model.as_ref().map(|m| m.time_unit.as_str()),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            stats: self.stats,
            warnings: &self.warnings,
            details: self.details.clone(),
        };
        let path = manifest_path(out);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn io_err(path: impl AsRef<Path>, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.as_ref().to_path_buf(),
        source,
    }
}

/// Fixed-width scientific notation used for every float in CSV output.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.15e}")
    }
}

pub fn json_pretty<S: Serialize>(value: &S) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}
