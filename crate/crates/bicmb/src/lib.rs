//! Configuration, sweep engine, and file output for the BICMB link
//! simulator. The numerical core lives in `bicmb-core`; this crate adds
//! everything that touches the OS: TOML configs, parallel Monte Carlo
//! scheduling, CSV/JSON artifacts, and the `bicmb` command-line tool.

pub mod config;
pub mod engine;
pub mod output;

pub use config::{ConfigError, ConfigFile};

/// Errors surfaced by the CLI layer, mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] bicmb_core::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// 2 for configuration problems, 3 for infeasible scenarios.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(bicmb_core::Error::InfeasibleConfiguration { .. })
            | CliError::Config(ConfigError::Core(
                bicmb_core::Error::InfeasibleConfiguration { .. },
            )) => 3,
            _ => 2,
        }
    }
}
