//! Synthetic benchmarks: random Erdős–Rényi and scale-free DAGs, random
//! binary conditional probability tables, and ancestral sampling.
//!
//! Every generator draws from a ChaCha8 stream seeded with the caller's seed,
//! so `(seed, parameters)` determine the output on every platform.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ci::Dataset;
use crate::error::{Error, Result};
use crate::graph::BinaryDag;

/// Range every CPT probability is drawn from.
pub const CPT_RANGE: (f64, f64) = (0.2, 0.8);

/// Largest parent set a CPT may be built for.
pub const MAX_PARENTS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphModel {
    Er,
    Sf,
}

impl GraphModel {
    pub fn name(self) -> &'static str {
        match self {
            GraphModel::Er => "er",
            GraphModel::Sf => "sf",
        }
    }

    pub fn generate(self, d: usize, ratio: f64, seed: u64) -> Result<BinaryDag> {
        match self {
            GraphModel::Er => gen_er_dag(d, ratio, seed),
            GraphModel::Sf => gen_sf_dag(d, ratio, seed),
        }
    }
}

impl fmt::Display for GraphModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GraphModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "er" => Ok(GraphModel::Er),
            "sf" => Ok(GraphModel::Sf),
            other => Err(Error::Config(format!("unknown graph model {other:?} (expected er or sf)"))),
        }
    }
}

fn check_size(d: usize, ratio: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::domain(format!("need at least 2 nodes, got {d}")));
    }
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::domain(format!("edge ratio {ratio} must be positive")));
    }
    Ok(())
}

/// Orients `pairs` from earlier to later position in `order`.
fn orient(d: usize, order: &[usize], pairs: &[(usize, usize)]) -> BinaryDag {
    let mut pos = vec![0; d];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }
    let edges: Vec<(usize, usize)> =
        pairs.iter().map(|&(a, b)| if pos[a] < pos[b] { (a, b) } else { (b, a) }).collect();
    BinaryDag::from_edges(d, &edges).expect("edges follow a total order")
}

/// Erdős–Rényi DAG: each pair, ordered by a random permutation, becomes an
/// edge with probability `min(1, ratio / d)`.
pub fn gen_er_dag(d: usize, ratio: f64, seed: u64) -> Result<BinaryDag> {
    check_size(d, ratio)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(&mut rng);
    let p = (ratio / d as f64).min(1.0);
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            if rng.random::<f64>() < p {
                pairs.push((order[i], order[j]));
            }
        }
    }
    Ok(orient(d, &order, &pairs))
}

/// Barabási–Albert attachment parameter for an edge ratio.
pub fn sf_attachment(ratio: f64) -> usize {
    (ratio / 2.0).floor() as usize
}

/// Scale-free DAG: a Barabási–Albert graph with `m = floor(ratio / 2)`,
/// grown from a star on `m + 1` nodes, oriented along a random permutation.
pub fn gen_sf_dag(d: usize, ratio: f64, seed: u64) -> Result<BinaryDag> {
    check_size(d, ratio)?;
    let m = sf_attachment(ratio);
    if m == 0 {
        return Err(Error::domain(format!("scale-free graphs need ratio >= 2, got {ratio}")));
    }
    if m >= d {
        return Err(Error::domain(format!("attachment {m} needs more than {d} nodes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(usize, usize)> = (1..=m).map(|v| (0, v)).collect();
    // Each node appears once per incident edge, so a uniform pick from this
    // list is a degree-proportional pick.
    let mut ends: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    for v in m + 1..d {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        while targets.len() < m {
            let t = ends[rng.random_range(0..ends.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            pairs.push((t, v));
            ends.extend([t, v]);
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(&mut rng);
    Ok(orient(d, &order, &pairs))
}

/// A DAG over binary variables with one CPT per node.
///
/// `cpts[i][c]` is `P(X_i = 1)` under parent configuration `c`, where bit `k`
/// of `c` is the value of the `k`-th parent in ascending index order.
#[derive(Clone, Debug, PartialEq)]
pub struct BayesNetBinary {
    dag: BinaryDag,
    parents: Vec<Vec<usize>>,
    cpts: Vec<Vec<f64>>,
}

impl BayesNetBinary {
    pub fn new(dag: BinaryDag, cpts: Vec<Vec<f64>>) -> Result<Self> {
        let d = dag.n_nodes();
        if cpts.len() != d {
            return Err(Error::domain(format!("{} CPTs for {d} nodes", cpts.len())));
        }
        let parents: Vec<Vec<usize>> = (0..d).map(|v| dag.graph().parents(v)).collect();
        for (v, (pa, cpt)) in parents.iter().zip(&cpts).enumerate() {
            if pa.len() > MAX_PARENTS {
                return Err(Error::domain(format!("node {v} has {} parents (limit {MAX_PARENTS})", pa.len())));
            }
            if cpt.len() != 1 << pa.len() {
                return Err(Error::domain(format!("node {v} has {} parents but {} CPT rows", pa.len(), cpt.len())));
            }
            if let Some(p) = cpt.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::domain(format!("node {v} has CPT entry {p} outside [0, 1]")));
            }
        }
        Ok(BayesNetBinary { dag, parents, cpts })
    }

    pub fn dag(&self) -> &BinaryDag {
        &self.dag
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn cpt(&self, v: usize) -> &[f64] {
        &self.cpts[v]
    }

    /// Row index of `v`'s CPT for a full assignment.
    pub fn config_index(&self, v: usize, values: &[u8]) -> usize {
        self.parents[v].iter().enumerate().fold(0, |acc, (k, &p)| acc | (usize::from(values[p] & 1) << k))
    }
}

/// Draws every CPT entry independently from `Uniform(0.2, 0.8)`.
pub fn gen_cpts(dag: &BinaryDag, seed: u64) -> Result<BayesNetBinary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = CPT_RANGE;
    let mut cpts = Vec::with_capacity(dag.n_nodes());
    for v in 0..dag.n_nodes() {
        let k = dag.graph().parents(v).len();
        if k > MAX_PARENTS {
            return Err(Error::domain(format!("node {v} has {k} parents (limit {MAX_PARENTS})")));
        }
        cpts.push((0..1usize << k).map(|_| rng.random_range(lo..hi)).collect());
    }
    BayesNetBinary::new(dag.clone(), cpts)
}

/// `n` i.i.d. rows by forward sampling in topological order, from a single
/// ChaCha8 stream consumed row by row.
pub fn ancestral_sample(net: &BayesNetBinary, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    let d = net.dag.n_nodes();
    let order = net.dag.topological_order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = vec![0u8; d];
        for &v in &order {
            let p = net.cpts[v][net.config_index(v, &row)];
            row[v] = u8::from(rng.random::<f64>() < p);
        }
        rows.push(row);
    }
    Dataset::from_binary_rows(d, &rows)
}

/// Parameters of one generated benchmark instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub model: GraphModel,
    pub nodes: usize,
    pub ratio: f64,
    pub samples: usize,
    pub seed: u64,
}

/// A generated instance: truth DAG, its network and a sample.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub net: BayesNetBinary,
    pub data: Dataset,
}

/// Builds graph, CPTs and data from one seed. The three stages use
/// independent streams derived as `seed`, `seed + 1` and `seed + 2`.
pub fn generate(params: &GenParams) -> Result<Benchmark> {
    let s = params.seed;
    let dag = params.model.generate(params.nodes, params.ratio, s)?;
    let net = gen_cpts(&dag, s.wrapping_add(1))?;
    let data = ancestral_sample(&net, params.samples, s.wrapping_add(2))?;
    Ok(Benchmark { net, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_ratio_cap_gives_complete_dag() {
        let g = gen_er_dag(6, 10.0, 3).unwrap();
        assert_eq!(g.n_edges(), 15);
    }

    #[test]
    fn sf_small_tree() {
        let g = gen_sf_dag(3, 2.0, 9).unwrap();
        assert_eq!(g.n_edges(), 2);
        assert!(gen_sf_dag(5, 1.0, 0).is_err());
    }

    #[test]
    fn cpt_shapes() {
        let g = BinaryDag::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let net = gen_cpts(&g, 1).unwrap();
        assert_eq!(net.cpt(0).len(), 1);
        assert_eq!(net.cpt(2).len(), 4);
        assert!(net.cpt(2).iter().all(|p| (0.2..=0.8).contains(p)));
        assert_eq!(net.config_index(2, &[1, 0, 0]), 1);
        assert_eq!(net.config_index(2, &[0, 1, 0]), 2);
    }

    #[test]
    fn generation_is_reproducible() {
        let p = GenParams { model: GraphModel::Er, nodes: 6, ratio: 2.0, samples: 50, seed: 11 };
        let (a, b) = (generate(&p).unwrap(), generate(&p).unwrap());
        assert_eq!(a.net, b.net);
        assert_eq!(a.data.content_hash(), b.data.content_hash());
    }
}
