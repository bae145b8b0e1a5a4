//! `gen`: a synthetic benchmark instance on disk.

use std::path::{Path, PathBuf};

use serde::Serialize;
use softsep::datagen::{generate, sf_attachment, GenParams, GraphModel};
use softsep::io;

use super::check_fresh;
use crate::error::CliResult;
use crate::manifest::{Manifest, MANIFEST_FILE};

pub const DATA_FILE: &str = "data.csv";
pub const TRUTH_FILE: &str = "truth.csv";

#[derive(Clone, Debug, Serialize)]
pub struct GenOutput {
    pub data: PathBuf,
    pub truth: PathBuf,
    pub manifest: PathBuf,
    pub n_edges: usize,
}

pub fn run(params: &GenParams, out: &Path, force: bool) -> CliResult<GenOutput> {
    check_fresh(out, &[DATA_FILE, TRUTH_FILE, MANIFEST_FILE], force)?;
    let bench = generate(params)?;
    let dag = bench.net.dag();
    io::write_text(&out.join(DATA_FILE), &io::render_dataset(&bench.data))?;
    io::write_text(&out.join(TRUTH_FILE), &io::render_adjacency(dag.graph()))?;
    let mut manifest = Manifest::new("gen", params, vec![params.seed])?
        .output("generator", "chacha8; graph seed s, cpt seed s+1, sample seed s+2")
        .output("data", DATA_FILE)
        .output("truth", TRUTH_FILE)
        .output("n_edges", dag.n_edges())
        .output("dataset_hash", bench.data.content_hash());
    if params.model == GraphModel::Sf {
        manifest = manifest.output("attachment", sf_attachment(params.ratio));
    }
    manifest.write(out)?;
    Ok(GenOutput {
        data: out.join(DATA_FILE),
        truth: out.join(TRUTH_FILE),
        manifest: out.join(MANIFEST_FILE),
        n_edges: dag.n_edges(),
    })
}
