//! Command-line arguments and their dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use softsep::datagen::{GenParams, GraphModel};

use crate::commands::{discover, eval, gen, pvalues};
use crate::config::{load_config, ChainOverrides, FileConfig, RunConfig, RunOverrides, CACHE_ENV, DEFAULT_CACHE_DIR};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "softsep", version, about = "Causal discovery with differentiable d-separation scores")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random DAG, binary CPTs and a sample.
    Gen(GenArgs),
    /// Compute (or load from cache) the order-0/1 p-value table of a dataset.
    Pvalues(PvalueArgs),
    /// Run sampling chains and select the top-K DAGs.
    Discover(DiscoverArgs),
    /// Score predicted DAGs against the truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value = "er")]
    pub model: GraphModel,
    #[arg(long)]
    pub nodes: usize,
    /// Expected edges per node.
    #[arg(long)]
    pub ratio: f64,
    #[arg(long)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct PvalueArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// fisher-z, chi-square or auto.
    #[arg(long, default_value = "auto")]
    pub test: String,
    #[arg(long, env = CACHE_ENV, default_value = DEFAULT_CACHE_DIR)]
    pub cache_dir: PathBuf,
    /// Treat every column as continuous.
    #[arg(long)]
    pub continuous: bool,
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    /// Dataset CSV; p-values are computed or read from the cache.
    #[arg(long, group = "source")]
    pub data: Option<PathBuf>,
    /// A p-value table directory.
    #[arg(long, group = "source")]
    pub table: Option<PathBuf>,
    /// Adjacency CSV whose exact d-separations serve as p-values.
    #[arg(long, group = "source")]
    pub oracle: Option<PathBuf>,
    /// TOML config; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, short, default_value = "discover-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,

    #[arg(long)]
    pub steps: Option<usize>,
    /// Step sizes; one set of chains per value.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub beta: Option<Vec<f64>>,
    /// Chains per beta value.
    #[arg(long)]
    pub chains: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub topk: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha_train: Option<f64>,
    #[arg(long)]
    pub alpha_eval: Option<f64>,
    /// Log-det scale of the acyclicity loss.
    #[arg(long)]
    pub s: Option<f64>,
    /// Path-length cap in the training scores; 0 for none.
    #[arg(long)]
    pub max_path_len: Option<usize>,
    /// Sum the CI losses instead of averaging them.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub test: Option<String>,
    #[arg(long, env = CACHE_ENV)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub continuous: bool,
}

impl DiscoverArgs {
    fn overrides(&self) -> FileConfig {
        FileConfig {
            chain: ChainOverrides {
                steps: self.steps,
                alpha_train: self.alpha_train,
                alpha_eval: self.alpha_eval,
                s: self.s,
                seed: self.seed,
                topk: self.topk,
                max_path_len: self.max_path_len,
                normalize_losses: self.no_normalize.then_some(false),
                ..Default::default()
            },
            run: RunOverrides {
                betas: self.beta.clone(),
                chains: self.chains,
                jobs: self.jobs,
                test: self.test.clone(),
                cache_dir: self.cache_dir.clone(),
                continuous: self.continuous.then_some(true),
            },
        }
    }

    fn source(&self) -> CliResult<discover::TableSource> {
        use discover::TableSource::*;
        match (&self.data, &self.table, &self.oracle) {
            (Some(p), None, None) => Ok(Data(p.clone())),
            (None, Some(p), None) => Ok(Table(p.clone())),
            (None, None, Some(p)) => Ok(Oracle(p.clone())),
            _ => Err(CliError::usage("give exactly one of --data, --table, --oracle")),
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted adjacency CSVs.
    #[arg(long, num_args = 1..)]
    pub pred: Vec<PathBuf>,
    /// Directory whose *.csv files are predictions.
    #[arg(long)]
    pub pred_dir: Option<PathBuf>,
    /// Truth adjacency CSV for --pred / --pred-dir.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// CSV with header `pred,truth`, one pair per row.
    #[arg(long)]
    pub batch: Option<PathBuf>,
    #[arg(long, short, default_value = "eval-out")]
    pub out: PathBuf,
}

impl EvalArgs {
    fn pairs(&self) -> CliResult<Vec<eval::EvalPair>> {
        let mut preds = self.pred.clone();
        if let Some(dir) = &self.pred_dir {
            preds.extend(eval::csv_files(dir)?);
        }
        let mut pairs = Vec::new();
        if !preds.is_empty() {
            let truth = self.truth.as_ref().ok_or_else(|| CliError::usage("--pred / --pred-dir need --truth"))?;
            pairs.extend(preds.into_iter().map(|pred| eval::EvalPair { pred, truth: truth.clone() }));
        }
        if let Some(b) = &self.batch {
            let base = b.parent().unwrap_or(Path::new("."));
            pairs.extend(eval::parse_batch(&softsep::io::read_text(b)?, base)?);
        }
        Ok(pairs)
    }
}

/// Runs one command; user-facing lines go to stdout.
pub fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Gen(a) => {
            let params = GenParams { model: a.model, nodes: a.nodes, ratio: a.ratio, samples: a.samples, seed: a.seed };
            let out = gen::run(&params, &a.out, a.force)?;
            println!(
                "wrote {}, {} ({} edges), {}",
                out.data.display(),
                out.truth.display(),
                out.n_edges,
                out.manifest.display()
            );
        }
        Command::Pvalues(a) => {
            let data = pvalues::load_dataset(&a.data, a.continuous)?;
            let summary = pvalues::run(&data, a.test.parse()?, &a.cache_dir)?;
            println!("{}", summary.render());
        }
        Command::Discover(a) => {
            let file = match &a.config {
                Some(p) => load_config(p)?,
                None => FileConfig::default(),
            };
            let cfg = RunConfig::resolve(&a.overrides(), &file)?;
            let sel = discover::run(&a.source()?, &cfg, &a.out, a.force)?;
            for c in &sel.chains {
                let rate = c.post_warmup_rate.unwrap_or(c.acceptance_rate);
                println!("chain {} beta {} seed {}: acceptance {rate:.3}", c.index, c.beta, c.seed);
            }
            for s in &sel.top {
                println!(
                    "#{} tptn {:.4} chain {} step {} -> {}",
                    s.rank,
                    s.tptn,
                    s.chain,
                    s.step,
                    a.out.join(&s.file).display()
                );
            }
        }
        Command::Eval(a) => {
            let rows = eval::run(&a.pairs()?, &a.out)?;
            for r in &rows {
                println!(
                    "{}: ci_mcc {:.4} skeleton_f1 {:.4} dag_f1 {:.4} shd {}",
                    r.pred.display(),
                    r.report.ci_mcc,
                    r.report.skeleton_f1,
                    r.report.dag_f1,
                    r.report.shd
                );
            }
        }
    }
    Ok(())
}
