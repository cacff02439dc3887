//! Experiment runner for `spdelab-core`: flat key-value configs, spectral
//! text files, CSV/JSON report bundles and long-format plot data.
//!
//! Every experiment is deterministic in `(config, seed)`; the worker count
//! changes wall time only.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod config;
pub mod experiments;
pub mod formats;
pub mod oracle;
pub mod plot;
pub mod presets;
pub mod report;

pub use config::{parse_config, parse_config_with_env, serialize_config, ConfigError, ConfigErrors, ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, run_to_dir};
pub use plot::emit_plotdata;
pub use report::{Bundle, Check};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Format(#[from] formats::FormatError),
    #[error("{module}::{operation}: {source}")]
    Core {
        module: &'static str,
        operation: &'static str,
        #[source]
        source: spdelab_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("no series named `{0}` in the bundle")]
    MissingSeries(String),
    #[error("experiment setup: {0}")]
    Setup(String),
}

impl LabError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}

/// Tag a core error with the module and operation that raised it.
pub trait At<T> {
    fn at(self, module: &'static str, operation: &'static str) -> Result<T, LabError>;
}

impl<T> At<T> for spdelab_core::Result<T> {
    fn at(self, module: &'static str, operation: &'static str) -> Result<T, LabError> {
        self.map_err(|source| LabError::Core { module, operation, source })
    }
}
