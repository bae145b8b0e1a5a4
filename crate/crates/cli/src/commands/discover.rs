//! `discover`: chains over a beta list, merged top-K selection.
//!
//! Output layout under the output directory:
//!
//! ```text
//! chain-00/trace.jsonl     one per (beta, replicate)
//! top/dag-1.csv ..         selected adjacency matrices, best first
//! selection.json           chain summaries and the ranked selection
//! manifest.json
//! ```

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use softsep::ci::{read_table_dir, CiTable};
use softsep::graph::BinaryDag;
use softsep::io;
use softsep::sampler::{run_chain, ChainConfig, ChainRun};
use softsep::select::{select_topk, DagCandidate};

use super::{check_fresh, pvalues, read_parsed};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{Manifest, MANIFEST_FILE};

pub const SELECTION_FILE: &str = "selection.json";
pub const TOP_DIR: &str = "top";
pub const TRACE_FILE: &str = "trace.jsonl";

/// Where the p-value table comes from.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableSource {
    /// Computed (or loaded from cache) for a dataset CSV.
    Data(PathBuf),
    /// A table directory as written by the cache.
    Table(PathBuf),
    /// Noiseless p-values of a known DAG (adjacency CSV).
    Oracle(PathBuf),
}

impl TableSource {
    pub fn load(&self, cfg: &RunConfig) -> CliResult<CiTable> {
        match self {
            TableSource::Data(p) => {
                let data = pvalues::load_dataset(p, cfg.continuous)?;
                let summary = pvalues::run(&data, cfg.ci_test(), &cfg.cache_dir)?;
                log::info!("{}", summary.render());
                Ok(summary.table)
            }
            TableSource::Table(p) => {
                Ok(read_table_dir(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?.0)
            }
            TableSource::Oracle(p) => {
                let g = read_parsed(p, io::parse_adjacency)?;
                let dag = BinaryDag::new(g).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
                Ok(CiTable::oracle(&dag))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub index: usize,
    pub beta: f64,
    pub seed: u64,
    pub acceptance_rate: f64,
    pub post_warmup_rate: Option<f64>,
    pub reinitialized: bool,
    pub warnings: Vec<String>,
    pub trace: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selected {
    pub rank: usize,
    pub chain: usize,
    pub beta: f64,
    pub step: usize,
    pub tptn: f64,
    pub file: PathBuf,
    #[serde(skip)]
    pub dag: Option<BinaryDag>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Selection {
    pub chains: Vec<ChainSummary>,
    pub top: Vec<Selected>,
}

/// Runs every chain of `cfg` on `table` with `cfg.jobs` workers. Results
/// come back in chain order regardless of scheduling.
pub fn run_chains(table: &CiTable, cfg: &RunConfig) -> CliResult<Vec<(ChainConfig, ChainRun)>> {
    let configs = cfg.chain_configs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.min(configs.len()))
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    let runs: Vec<softsep::Result<ChainRun>> =
        pool.install(|| configs.par_iter().map(|c| run_chain(table, c)).collect());
    configs.into_iter().zip(runs).map(|(c, r)| Ok((c, r?))).collect()
}

/// Top-K over the candidates of all chains. Ties on score and step go to
/// the lower chain index.
pub fn merge_topk(runs: &[(ChainConfig, ChainRun)], k: usize) -> CliResult<Vec<Selected>> {
    let mut pool: Vec<DagCandidate> = Vec::new();
    let mut origin: Vec<usize> = Vec::new();
    for (i, (_, run)) in runs.iter().enumerate() {
        pool.extend(run.candidates.iter().cloned());
        origin.extend(std::iter::repeat_n(i, run.candidates.len()));
    }
    let top = select_topk(&pool, k)?;
    top.into_iter()
        .enumerate()
        .map(|(r, c)| {
            let chain = pool
                .iter()
                .zip(&origin)
                .find(|(p, _)| p.step == c.step && p.tptn == c.tptn && p.dag == c.dag)
                .map(|(_, &i)| i)
                .ok_or_else(|| CliError::Internal("selected candidate has no source chain".into()))?;
            Ok(Selected {
                rank: r + 1,
                chain,
                beta: runs[chain].0.beta,
                step: c.step,
                tptn: c.tptn,
                file: PathBuf::from(TOP_DIR).join(format!("dag-{}.csv", r + 1)),
                dag: Some(c.dag),
            })
        })
        .collect()
}

/// Runs discovery and writes every artifact under `out`.
pub fn run(source: &TableSource, cfg: &RunConfig, out: &Path, force: bool) -> CliResult<Selection> {
    check_fresh(out, &[SELECTION_FILE, MANIFEST_FILE], force)?;
    let table = source.load(cfg)?;
    let runs = run_chains(&table, cfg)?;

    let mut chains = Vec::with_capacity(runs.len());
    for (i, (c, run)) in runs.iter().enumerate() {
        let trace = PathBuf::from(format!("chain-{i:02}")).join(TRACE_FILE);
        io::write_text(&out.join(&trace), &io::render_trace(&run.trace)?)?;
        for w in &run.warnings {
            log::warn!("chain {i} (beta {}): {w}", c.beta);
        }
        chains.push(ChainSummary {
            index: i,
            beta: c.beta,
            seed: c.seed,
            acceptance_rate: run.acceptance_rate,
            post_warmup_rate: run.post_warmup_rate,
            reinitialized: run.reinitialized,
            warnings: run.warnings.clone(),
            trace,
        });
    }

    let top = merge_topk(&runs, cfg.chain.topk)?;
    for s in &top {
        let dag = s.dag.as_ref().expect("set by merge_topk");
        io::write_text(&out.join(&s.file), &io::render_adjacency(dag.graph()))?;
    }
    let selection = Selection { chains, top };
    let body = serde_json::to_string_pretty(&selection).map_err(softsep::Error::from)? + "\n";
    io::write_text(&out.join(SELECTION_FILE), &body)?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        source: &'a TableSource,
        run: &'a RunConfig,
    }
    let seeds = runs.iter().map(|(c, _)| c.seed).collect();
    Manifest::new("discover", &Resolved { source, run: cfg }, seeds)?
        .output("selection", SELECTION_FILE)
        .output("top", selection.top.iter().map(|s| &s.file).collect::<Vec<_>>())
        .write(out)?;
    Ok(selection)
}
