//! Command-line front end: `construct`, `verify`, `quotient`, `spectrum`,
//! `cosserat` and `report`, all driven by one [`RunConfig`].
//!
//! Exit codes: 0 every claim holds, 1 a claim failed (or the run itself
//! failed), 2 an artifact failed its integrity check, 3 an artifact is
//! missing, 4 the configuration is invalid.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{artifact_names, execute, Status};
pub use config::{CosseratConfig, DomainConfig, EigenConfig, Format, RunConfig};

use crate::error::{AnalysisError, ConstructionError, GeometryError};
use crate::geometry::DecompositionMode;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("missing artifact {} (run `kornlab construct` first)", .0.display())]
    MissingArtifact(PathBuf),
    #[error("{} claim(s) failed", .0.len())]
    Claims(Vec<String>),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Claims(_) | CliError::Runtime(_) => 1,
            CliError::Integrity(_) => 2,
            CliError::MissingArtifact(_) => 3,
            CliError::Config(_) => 4,
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Integrity(m) => CliError::Integrity(m),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ConstructionError> for CliError {
    fn from(e: ConstructionError) -> Self {
        match e {
            ConstructionError::Geometry(g) => g.into(),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Construction(c) => c.into(),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "kornlab", version, about = "Counterexamples to Korn and Garding inequalities with non-constant coefficients")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Build the coverings and the coefficient field and write them out.
    Construct,
    /// Re-check the written artifacts and sample both constructions.
    Verify,
    /// Korn quotients of the witnesses along the level ladder.
    Quotient,
    /// Smallest discrete coercivity constants (control meshes and level ladder).
    Spectrum,
    /// Cosserat energy of a sample configuration and its invariance checks.
    Cosserat,
    /// Summarize the status files of earlier commands.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Construct => "construct",
            Command::Verify => "verify",
            Command::Quotient => "quotient",
            Command::Spectrum => "spectrum",
            Command::Cosserat => "cosserat",
            Command::Report => "report",
        }
    }
}

/// Flags that override the config file.
#[derive(Clone, Debug, Default, Args)]
pub struct Overrides {
    /// TOML config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Comma-separated levels, e.g. `1,2,4,8`.
    #[arg(long, global = true, value_delimiter = ',', value_name = "CSV")]
    pub n_list: Option<Vec<u32>>,
    /// Residual budget of the rotated coverings.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub mesh: Option<usize>,
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<DecompositionMode>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Report formats, comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
}

fn parse_mode(s: &str) -> Result<DecompositionMode, String> {
    match s {
        "single" => Ok(DecompositionMode::Single),
        "slabs" => Ok(DecompositionMode::Slabs),
        _ => Err(format!("expected `single` or `slabs`, got `{s}`")),
    }
}

impl Overrides {
    /// Loads the config file (or the defaults), applies the flags and validates.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.q {
            c.q = v;
        }
        if let Some(v) = &self.n_list {
            c.n_list = v.clone();
        }
        if let Some(v) = self.eps {
            c.eps_pack = v;
        }
        if let Some(v) = self.lambda {
            c.lambda = v;
        }
        if let Some(v) = self.mesh {
            c.mesh = v;
        }
        if let Some(v) = self.mode {
            c.mode = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = &self.format {
            c.formats = v.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

/// Caps rayon's global pool at `KORNLAB_THREADS` if set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("KORNLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("KORNLAB_THREADS: expected a positive integer, got `{v}`")))?;
    // a second initialization (tests, embedding) keeps the existing pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 4 } else { 0 };
        }
    };
    let result = init_threads()
        .and_then(|_| cli.overrides.resolve())
        .and_then(|cfg| execute(cli.command, &cfg));
    match result {
        Ok(status) => {
            println!("{}: all {} claim(s) hold", status.command, status.checked);
            0
        }
        Err(e) => {
            if let CliError::Claims(list) = &e {
                for f in list {
                    eprintln!("FAIL {f}");
                }
            }
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
