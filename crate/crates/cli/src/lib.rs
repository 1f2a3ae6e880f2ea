//! `retouch` command-line driver.
//!
//! Every command prints line-oriented `key=value` reports on stdout and
//! exits with 0 on success, 1 on a validation failure, 2 on an I/O failure
//! and 3 on a protocol failure. Errors are reported on stderr as
//! `error.code=` and `error.message=` lines.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod grpo;

pub use config::{CliConfig, GlobalArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Validation = 1,
    Io = 2,
    Protocol = 3,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: ExitKind,
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind,
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Validation, "Invalid", message)
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::new(ExitKind::Io, "Io", format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "retouch", version, about = "ROC validation, rendering, rewards, metrics and the A2L server")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a ROC file against the catalog and list every violation.
    Validate { roc: PathBuf },
    /// Score a predicted response or ROC against a target ROC and image.
    Reward {
        pred: PathBuf,
        tgt: PathBuf,
        src_image: PathBuf,
        tgt_image: PathBuf,
        #[arg(long)]
        segmentation: Option<PathBuf>,
    },
    /// Apply a ROC to a PNG.
    Render {
        roc: PathBuf,
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        segmentation: Option<PathBuf>,
    },
    /// L1/L2 distances between two PNGs, optionally region-weighted.
    Metrics {
        a: PathBuf,
        b: PathBuf,
        /// Grayscale PNG marking the region of interest.
        #[arg(long)]
        region: Option<PathBuf>,
    },
    /// Print the Lua develop script for a ROC.
    Translate { roc: PathBuf },
    /// Run the A2L server on `--bind`.
    Serve,
    /// Run one job on an A2L server at `--bind` and save the rendered PNG.
    Submit {
        roc: PathBuf,
        image: PathBuf,
        output: PathBuf,
        #[arg(long)]
        segmentation: Option<PathBuf>,
        /// Also save the translated script here.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value = "job-1")]
        job: String,
    },
    /// Score groups of perturbed ROCs and print rewards and advantages per step.
    GrpoSim {
        src_image: PathBuf,
        tgt_roc: PathBuf,
        tgt_image: PathBuf,
        /// Group size.
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Perturbation scale as a fraction of each parameter's range.
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Step toward the best candidate.
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        /// Per-step factor applied to sigma.
        #[arg(long, default_value_t = 0.85)]
        decay: f64,
        /// Distance of the seed document from the target, per parameter.
        #[arg(long, default_value_t = 0.5)]
        init_offset: f64,
        #[arg(long)]
        segmentation: Option<PathBuf>,
    },
}

fn report_error(err: &mut dyn Write, e: &CliError) {
    let message = e.message.replace('\n', " ");
    let _ = writeln!(err, "error.code={}\nerror.message={message}", e.code);
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                ExitKind::Validation as i32
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let result = CliConfig::resolve(&cli.global).and_then(|cfg| commands::dispatch(&cli.command, &cfg, out));
    let _ = out.flush();
    match result {
        Ok(()) => 0,
        Err(e) => {
            report_error(err, &e);
            e.exit_code()
        }
    }
}
