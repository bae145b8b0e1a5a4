//! Run configuration: built-in defaults, overridden by a TOML file,
//! overridden by command-line flags.
//!
//! ```toml
//! [chain]
//! steps = 1000
//! alpha_train = 0.01
//! max_path_len = 2      # 0 means no cap
//!
//! [run]
//! betas = [0.6, 0.8, 1.0]
//! chains = 1
//! test = "auto"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use softsep::ci::CiTest;
use softsep::sampler::{ChainConfig, DEFAULT_BETA};

use crate::error::{CliError, CliResult};

pub const CACHE_ENV: &str = "SOFTSEP_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".softsep-cache";

/// Chain settings that may be left unset at one layer.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainOverrides {
    pub steps: Option<usize>,
    pub alpha_train: Option<f64>,
    pub alpha_eval: Option<f64>,
    pub s: Option<f64>,
    pub seed: Option<u64>,
    pub topk: Option<usize>,
    pub support: Option<Vec<f64>>,
    pub max_path_len: Option<usize>,
    pub normalize_losses: Option<bool>,
    pub task_weights: Option<[f64; 5]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOverrides {
    pub betas: Option<Vec<f64>>,
    pub chains: Option<usize>,
    pub jobs: Option<usize>,
    pub test: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub continuous: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub chain: ChainOverrides,
    #[serde(default)]
    pub run: RunOverrides,
}

pub fn parse_config(text: &str) -> CliResult<FileConfig> {
    toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))
}

pub fn load_config(path: &Path) -> CliResult<FileConfig> {
    parse_config(&softsep::io::read_text(path)?)
}

fn pick<T>(cli: Option<T>, file: Option<T>) -> Option<T> {
    cli.or(file)
}

/// Fully resolved discovery settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub chain: ChainConfig,
    pub betas: Vec<f64>,
    /// Chains per beta value.
    pub chains: usize,
    /// Worker threads for running chains.
    pub jobs: usize,
    pub test: String,
    pub cache_dir: PathBuf,
    pub continuous: bool,
}

impl RunConfig {
    /// Layers `cli` over `file` over the defaults.
    pub fn resolve(cli: &FileConfig, file: &FileConfig) -> CliResult<Self> {
        let (c, f) = (&cli.chain, &file.chain);
        let d = ChainConfig::default();
        let max_path_len = match pick(c.max_path_len, f.max_path_len) {
            Some(0) => None,
            Some(l) => Some(l),
            None => d.max_path_len,
        };
        let chain = ChainConfig {
            beta: DEFAULT_BETA,
            steps: pick(c.steps, f.steps).unwrap_or(d.steps),
            alpha_train: pick(c.alpha_train, f.alpha_train).unwrap_or(d.alpha_train),
            alpha_eval: pick(c.alpha_eval, f.alpha_eval).unwrap_or(d.alpha_eval),
            s: pick(c.s, f.s).or(d.s),
            seed: pick(c.seed, f.seed).unwrap_or(d.seed),
            topk: pick(c.topk, f.topk).unwrap_or(d.topk),
            support: pick(c.support.clone(), f.support.clone()).unwrap_or(d.support),
            max_path_len,
            normalize_losses: pick(c.normalize_losses, f.normalize_losses).unwrap_or(d.normalize_losses),
            task_weights: pick(c.task_weights, f.task_weights).unwrap_or(d.task_weights),
        };
        chain.validate()?;
        let (c, f) = (&cli.run, &file.run);
        let betas = pick(c.betas.clone(), f.betas.clone()).unwrap_or_else(|| vec![DEFAULT_BETA]);
        if betas.is_empty() {
            return Err(CliError::usage("beta list is empty"));
        }
        for &b in &betas {
            ChainConfig { beta: b, ..chain.clone() }.validate()?;
        }
        let chains = pick(c.chains, f.chains).unwrap_or(1);
        if chains == 0 {
            return Err(CliError::usage("need at least one chain per beta"));
        }
        let jobs =
            pick(c.jobs, f.jobs).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
        let test = pick(c.test.clone(), f.test.clone()).unwrap_or_else(|| "auto".to_string());
        test.parse::<CiTest>()?;
        let cache_dir =
            pick(c.cache_dir.clone(), f.cache_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR));
        Ok(RunConfig {
            chain,
            betas,
            chains,
            jobs,
            test,
            cache_dir,
            continuous: pick(c.continuous, f.continuous).unwrap_or(false),
        })
    }

    pub fn ci_test(&self) -> CiTest {
        self.test.parse().expect("validated in resolve")
    }

    /// One chain config per (beta, replicate), seeds counting up from the
    /// base seed in that order.
    pub fn chain_configs(&self) -> Vec<ChainConfig> {
        let mut out = Vec::with_capacity(self.betas.len() * self.chains);
        for &beta in &self.betas {
            for _ in 0..self.chains {
                let seed = self.chain.seed.wrapping_add(out.len() as u64);
                out.push(ChainConfig { beta, seed, ..self.chain.clone() });
            }
        }
        out
    }
}
