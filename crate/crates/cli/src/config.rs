//! Layered configuration: built-in defaults, then an optional TOML file, then
//! `A2L_*` environment variables and command-line flags.
//!
//! | flag                  | environment             | file key            |
//! |-----------------------|-------------------------|---------------------|
//! | `--config`            | `A2L_CONFIG`            |                     |
//! | `--catalog`           | `A2L_CATALOG`           | `catalog`           |
//! | `--gamma`             | `A2L_GAMMA`             | `gamma`             |
//! | `--alpha`             | `A2L_ALPHA`             | `alpha`             |
//! | `--color-tolerance`   | `A2L_COLOR_TOLERANCE`   | `color_tolerance`   |
//! | `--luminance-feather` | `A2L_LUMINANCE_FEATHER` | `luminance_feather` |
//! | `--color-samples`     | `A2L_COLOR_SAMPLES`     | `color_samples`     |
//! | `--seed`              | `A2L_SEED`              | `seed`              |
//! | `--bind`              | `A2L_BIND`              | `bind`              |
//! | `--workers`           | `A2L_WORKERS`           | `workers`           |
//! | `--timeout` (seconds) | `A2L_TIMEOUT`           | `timeout`           |

use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use clap::Args;
use serde::Deserialize;

use retouch_core::a2l::ServerConfig;
use retouch_core::metrics::DEFAULT_ALPHA;
use retouch_core::reward::DEFAULT_GAMMA;
use retouch_core::roc::{load_catalog, ToolCatalog};

use crate::CliError;

pub const DEFAULT_BIND: &str = "127.0.0.1:7878";
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML file with default settings.
    #[arg(long, global = true, env = "A2L_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Tool catalog JSON; the bundled catalog when absent.
    #[arg(long, global = true, env = "A2L_CATALOG", value_name = "FILE")]
    pub catalog: Option<PathBuf>,
    /// Weight of colour-distribution similarity in the PQ reward.
    #[arg(long, global = true, env = "A2L_GAMMA")]
    pub gamma: Option<f64>,
    /// Weight outside the region of interest for region-weighted metrics.
    #[arg(long, global = true, env = "A2L_ALPHA")]
    pub alpha: Option<f64>,
    /// Colour-range mask tolerance in ΔE00.
    #[arg(long, global = true, env = "A2L_COLOR_TOLERANCE")]
    pub color_tolerance: Option<f64>,
    /// Luminance-range mask feather on the L*/100 scale.
    #[arg(long, global = true, env = "A2L_LUMINANCE_FEATHER")]
    pub luminance_feather: Option<f64>,
    /// Lab samples per colour-range mask.
    #[arg(long, global = true, env = "A2L_COLOR_SAMPLES")]
    pub color_samples: Option<usize>,
    #[arg(long, global = true, env = "A2L_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true, env = "A2L_BIND")]
    pub bind: Option<String>,
    #[arg(long, global = true, env = "A2L_WORKERS")]
    pub workers: Option<usize>,
    /// Per-job time budget in seconds.
    #[arg(long, global = true, env = "A2L_TIMEOUT")]
    pub timeout: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    catalog: Option<PathBuf>,
    gamma: Option<f64>,
    alpha: Option<f64>,
    color_tolerance: Option<f64>,
    luminance_feather: Option<f64>,
    color_samples: Option<usize>,
    seed: Option<u64>,
    bind: Option<String>,
    workers: Option<usize>,
    timeout: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub catalog: Option<PathBuf>,
    pub gamma: f64,
    pub alpha: f64,
    /// Overrides the catalog's colour tolerance when set.
    pub color_tolerance: Option<f64>,
    pub luminance_feather: Option<f64>,
    pub color_samples: Option<usize>,
    pub seed: u64,
    pub bind: String,
    pub workers: usize,
    pub timeout: Duration,
}

impl Default for CliConfig {
    fn default() -> Self {
        let server = ServerConfig::default();
        Self {
            catalog: None,
            gamma: DEFAULT_GAMMA,
            alpha: DEFAULT_ALPHA,
            color_tolerance: None,
            luminance_feather: None,
            color_samples: None,
            seed: DEFAULT_SEED,
            bind: DEFAULT_BIND.to_owned(),
            workers: server.workers,
            timeout: server.timeout,
        }
    }
}

fn invalid(key: &str, message: impl std::fmt::Display) -> CliError {
    CliError::validation(format!("config {key}: {message}"))
}

impl CliConfig {
    pub fn resolve(args: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let d = Self::default();
        let timeout = args.timeout.or(file.timeout);
        let cfg = Self {
            catalog: args.catalog.clone().or(file.catalog),
            gamma: args.gamma.or(file.gamma).unwrap_or(d.gamma),
            alpha: args.alpha.or(file.alpha).unwrap_or(d.alpha),
            color_tolerance: args.color_tolerance.or(file.color_tolerance),
            luminance_feather: args.luminance_feather.or(file.luminance_feather),
            color_samples: args.color_samples.or(file.color_samples),
            seed: args.seed.or(file.seed).unwrap_or(d.seed),
            bind: args.bind.clone().or(file.bind).unwrap_or(d.bind),
            workers: args.workers.or(file.workers).unwrap_or(d.workers),
            timeout: match timeout {
                Some(s) if s.is_finite() && s > 0.0 => Duration::from_secs_f64(s),
                Some(s) => return Err(invalid("timeout", format!("{s} is not a positive number of seconds"))),
                None => d.timeout,
            },
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(invalid("gamma", format!("{} outside [0, 1]", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha", format!("{} outside [0, 1]", self.alpha)));
        }
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        Ok(())
    }

    /// Loads the configured catalog and applies the setting overrides.
    pub fn load_catalog(&self) -> Result<ToolCatalog, CliError> {
        let catalog = match &self.catalog {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                load_catalog(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
            }
            None => ToolCatalog::default_catalog(),
        };
        if self.color_tolerance.is_none() && self.luminance_feather.is_none() && self.color_samples.is_none() {
            return Ok(catalog);
        }
        let mut settings = catalog.settings().clone();
        if let Some(v) = self.color_tolerance {
            settings.color_tolerance = v;
        }
        if let Some(v) = self.luminance_feather {
            settings.luminance_feather = v;
        }
        if let Some(v) = self.color_samples {
            settings.color_samples = v;
        }
        ToolCatalog::from_parts(catalog.tools().cloned().collect(), settings)
            .map_err(|e| CliError::validation(format!("catalog settings: {e}")))
    }

    pub fn server_config(&self) -> ServerConfig {
        ServerConfig {
            workers: self.workers,
            timeout: self.timeout,
            ..ServerConfig::default()
        }
    }
}
