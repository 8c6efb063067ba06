//! Batch driver: JSON experiment configs in, CSV/JSON/SVG artifacts out.
//!
//! Every run writes `manifest.json` last. Its `config` field is the
//! resolved configuration, so feeding it back reproduces the run.

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{Abscissa, Command, ExperimentConfig, Options, SweepSpec};
pub use output::{Manifest, RunStatus};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("{context}: {message}")]
    ComputeFailed { context: String, message: String },
    #[error("{failed} of {total} sweep points failed")]
    PartialFailure { failed: usize, total: usize },
    #[error("I/O failure at {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Io { path: path.to_path_buf(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ConfigInvalid(_) => 2,
            Self::ComputeFailed { .. } => 3,
            Self::PartialFailure { .. } => 4,
            Self::Io { .. } => 5,
        }
    }
}

/// Overrides from the command line, applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub precision: Option<u32>,
}

impl ExperimentConfig {
    /// Applies overrides and fills the output directory.
    pub fn resolve(mut self, ov: &Overrides) -> Result<Self, CliError> {
        if let Some(out) = &ov.out {
            self.output_dir = Some(out.clone());
        }
        if let Some(bits) = ov.precision {
            self.options.precision_bits = bits;
        }
        if self.output_dir.is_none() {
            self.output_dir = Some(PathBuf::from("out"));
        }
        self.validate()?;
        Ok(self)
    }
}

/// Runs a resolved config and writes its artifacts and manifest.
///
/// A sweep with failed points still writes everything and then returns
/// [`CliError::PartialFailure`].
pub fn run(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Manifest, CliError> {
    cfg.validate()?;
    let root = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut out = output::OutputDir::create(&root)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::ConfigInvalid("--threads must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::ComputeFailed { context: "thread pool".into(), message: e.to_string() })?;
    let (failed, total) = pool.install(|| -> Result<(usize, usize), CliError> {
        match cfg.command {
            Command::Classify => commands::classify(cfg, &mut out)?,
            Command::Biortho => commands::biortho(cfg, &mut out)?,
            Command::Pw => commands::pw(cfg, &mut out)?,
            Command::Bounds => commands::bounds(cfg, &mut out)?,
            Command::Cost => commands::cost(cfg, &mut out)?,
            Command::Sweep => {
                let s = sweep::sweep(cfg, &mut out)?;
                return Ok((s.failed, s.total));
            }
        }
        Ok((0, 1))
    })?;
    let mut artifacts = out.written().to_vec();
    artifacts.push("manifest.json".into());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        status: if failed == 0 { RunStatus::Ok } else { RunStatus::PartialFailure },
        failed_points: failed,
        artifacts,
    };
    out.write_json("manifest.json", &manifest)?;
    if failed > 0 {
        return Err(CliError::PartialFailure { failed, total });
    }
    Ok(manifest)
}
