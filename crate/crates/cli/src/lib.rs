//! Configuration, experiment runners and data emission for the rydsqueeze
//! toolkit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

pub mod config;
pub mod output;
pub mod pipelines;

pub use config::ExperimentConfig;
pub use rydsqueeze_core as core;

use pipelines::Artifacts;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for invalid input or unwritable output, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<rydsqueeze_core::Error> for CliError {
    fn from(e: rydsqueeze_core::Error) -> Self {
        use rydsqueeze_core::Error as E;
        match e {
            E::Io(io) => CliError::Io(io),
            E::InvalidEnsemble(_)
            | E::InvalidParameter { .. }
            | E::ZeroAxis
            | E::AxisNotNormalized(_)
            | E::ResonantDressing
            | E::InvalidSchedule(_)
            | E::BackendMismatch(_)
            | E::Format(_) => CliError::Validation(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<rydsqueeze_core::estimators::EstimatorError> for CliError {
    fn from(e: rydsqueeze_core::estimators::EstimatorError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    SimulateSqueezing,
    SimulateLoss,
    Spectroscopy,
    Calibrate,
    IsingLimit,
    Sweep,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::SimulateSqueezing,
        Subcommand::SimulateLoss,
        Subcommand::Spectroscopy,
        Subcommand::Calibrate,
        Subcommand::IsingLimit,
        Subcommand::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::SimulateSqueezing => "simulate-squeezing",
            Subcommand::SimulateLoss => "simulate-loss",
            Subcommand::Spectroscopy => "spectroscopy",
            Subcommand::Calibrate => "calibrate",
            Subcommand::IsingLimit => "ising-limit",
            Subcommand::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Validation(format!("unknown subcommand {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub subcommand: Subcommand,
    pub seed: u64,
    pub config_hash: String,
    /// Data files, excluding the manifest.
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(config.to_toml().as_bytes()))
}

fn artifacts(cmd: Subcommand, config: &ExperimentConfig, seed: u64) -> Result<Artifacts, CliError> {
    Ok(match cmd {
        Subcommand::SimulateSqueezing => pipelines::squeezing(config, seed)?.artifacts(),
        Subcommand::SimulateLoss => pipelines::loss_statistics(config, seed)?.artifacts(),
        Subcommand::Spectroscopy => pipelines::spectroscopy(config, seed)?.artifacts(),
        Subcommand::Calibrate => pipelines::calibrate(config, seed)?.artifacts(),
        Subcommand::IsingLimit => pipelines::ising_limit(config, seed)?.artifacts(),
        Subcommand::Sweep => pipelines::sweep(config, seed)?.artifacts(),
    })
}

/// Runs one subcommand and writes its data files plus `manifest.txt` into
/// `out` (the configured output directory when `None`). `seed` and
/// `threads` override the configuration.
pub fn run_subcommand(
    cmd: Subcommand,
    config: &ExperimentConfig,
    seed: Option<u64>,
    out: Option<&Path>,
    threads: Option<usize>,
) -> Result<RunSummary, CliError> {
    config.validate()?;
    let seed = seed.unwrap_or(config.run.seed);
    let threads = threads.unwrap_or(config.run.threads);
    let dir = out.map_or_else(|| config.output.dir.clone(), Path::to_path_buf);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Validation(format!("cannot build a pool of {threads} threads: {e}")))?;
    log::info!("running {cmd} with seed {seed} on {} threads", pool.current_num_threads());
    let produced = pool.install(|| artifacts(cmd, config, seed))?;

    fs::create_dir_all(&dir)?;
    let mut files = output::emit_plot_data(&dir, &produced.curves, config.output.svg)?;
    files.extend(output::emit_tables(&dir, &produced.tables)?);
    let config_path = dir.join("config.toml");
    fs::write(&config_path, config.to_toml())?;
    files.push(config_path);

    let hash = config_hash(config);
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut manifest = format!(
        "subcommand = {cmd}\nseed = {seed}\nconfig_sha256 = {hash}\nversion = {}\nthreads = {threads}\n",
        env!("CARGO_PKG_VERSION")
    );
    for f in &files {
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        manifest.push_str(&format!("file = {name} sha256:{}\n", hex::encode(Sha256::digest(fs::read(f)?))));
    }
    manifest.push_str(&format!("timestamp = {timestamp}\n"));
    let manifest_path = dir.join("manifest.txt");
    fs::write(&manifest_path, manifest)?;
    log::info!("wrote {} files to {}", files.len() + 1, dir.display());
    Ok(RunSummary { subcommand: cmd, seed, config_hash: hash, files, manifest: manifest_path })
}
