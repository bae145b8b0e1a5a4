//! Discrete graph types, reachability and low-order d-separation.
//!
//! Node labels are `0..d`. Adjacency entry `(u, v)` set means the edge `u -> v`.

mod fas;
pub mod oracle;

pub use fas::{feedback_arc_prune, minimum_feedback_arc_set};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::logic::PROB_EPS;

/// A directed graph without self-loops. Cycles are allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DirectedGraph {
    n: usize,
    adj: Vec<bool>,
}

impl DirectedGraph {
    pub fn empty(n: usize) -> Self {
        DirectedGraph { n, adj: vec![false; n * n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = DirectedGraph::empty(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Builds a graph from a row-major `n x n` adjacency.
    pub fn from_adjacency(n: usize, adj: Vec<bool>) -> Result<Self> {
        if adj.len() != n * n {
            return Err(Error::domain(format!("adjacency has {} entries, expected {}", adj.len(), n * n)));
        }
        if let Some(i) = (0..n).find(|&i| adj[i * n + i]) {
            return Err(Error::domain(format!("self-loop on node {i}")));
        }
        Ok(DirectedGraph { n, adj })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.n + v]
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            return Err(Error::domain(format!("self-loop on node {u}")));
        }
        self.adj[u * self.n + v] = true;
        Ok(())
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        self.adj[u * self.n + v] = false;
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.adj.iter().enumerate().filter(|(_, &e)| e).map(move |(i, _)| (i / n, i % n))
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }

    pub fn adjacency(&self) -> &[bool] {
        &self.adj
    }

    pub fn parents(&self, v: usize) -> Vec<usize> {
        (0..self.n).filter(|&u| self.has_edge(u, v)).collect()
    }

    pub fn children(&self, u: usize) -> Vec<usize> {
        (0..self.n).filter(|&v| self.has_edge(u, v)).collect()
    }

    /// Kahn's algorithm; `None` when the graph has a cycle. Ties resolve to
    /// the smallest label.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.n;
        let mut indeg: Vec<usize> = (0..n).map(|v| self.parents(v).len()).collect();
        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = ready.pop_first() {
            order.push(u);
            for v in 0..n {
                if self.has_edge(u, v) {
                    indeg[v] -= 1;
                    if indeg[v] == 0 {
                        ready.insert(v);
                    }
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Drops node `z`, returning the induced subgraph on the remaining nodes.
    pub fn remove_node(&self, z: usize) -> Result<(DirectedGraph, NodeMap)> {
        self.check_node(z)?;
        let map = NodeMap::without(self.n, z);
        let m = self.n - 1;
        let mut adj = vec![false; m * m];
        for (i, &oi) in map.kept.iter().enumerate() {
            for (j, &oj) in map.kept.iter().enumerate() {
                adj[i * m + j] = self.has_edge(oi, oj);
            }
        }
        Ok((DirectedGraph { n: m, adj }, map))
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::domain(format!("node {v} out of range for {} nodes", self.n)))
        }
    }
}

/// A directed acyclic graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryDag(DirectedGraph);

impl BinaryDag {
    pub fn new(g: DirectedGraph) -> Result<Self> {
        if g.is_acyclic() {
            Ok(BinaryDag(g))
        } else {
            Err(Error::Cyclic)
        }
    }

    pub fn empty(n: usize) -> Self {
        BinaryDag(DirectedGraph::empty(n))
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        BinaryDag::new(DirectedGraph::from_edges(n, edges)?)
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.0
    }

    pub fn into_graph(self) -> DirectedGraph {
        self.0
    }

    pub fn n_nodes(&self) -> usize {
        self.0.n
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.0.has_edge(u, v)
    }

    pub fn topological_order(&self) -> Vec<usize> {
        self.0.topological_order().expect("BinaryDag invariant: acyclic")
    }

    pub fn remove_node(&self, z: usize) -> Result<(BinaryDag, NodeMap)> {
        let (g, map) = self.0.remove_node(z)?;
        Ok((BinaryDag(g), map))
    }
}

impl std::ops::Deref for BinaryDag {
    type Target = DirectedGraph;

    fn deref(&self) -> &DirectedGraph {
        &self.0
    }
}

/// Label correspondence after deleting one node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeMap {
    removed: usize,
    /// `kept[new] = old`.
    kept: Vec<usize>,
}

impl NodeMap {
    fn without(n: usize, z: usize) -> Self {
        NodeMap { removed: z, kept: (0..n).filter(|&v| v != z).collect() }
    }

    pub fn removed(&self) -> usize {
        self.removed
    }

    pub fn to_old(&self, new: usize) -> usize {
        self.kept[new]
    }

    pub fn to_new(&self, old: usize) -> Option<usize> {
        match old.cmp(&self.removed) {
            std::cmp::Ordering::Less => Some(old),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(old - 1),
        }
    }
}

/// Edge probabilities of a random directed graph. Diagonal entries are zero.
///
/// Entries built from continuous values are clamped to `[PROB_EPS, 1 - PROB_EPS]`;
/// entries built from a discrete graph are exactly 0 or 1.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    w: Vec<f64>,
}

impl WeightMatrix {
    /// Clamps every off-diagonal entry into `[PROB_EPS, 1 - PROB_EPS]` and
    /// zeroes the diagonal.
    pub fn from_probabilities(w: &Array2<f64>) -> Result<Self> {
        let (r, c) = w.dim();
        if r != c {
            return Err(Error::domain(format!("weight matrix is {r}x{c}")));
        }
        let mut out = vec![0.0; r * r];
        for ((i, j), &v) in w.indexed_iter() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("weight {v} at ({i},{j}) outside [0,1]")));
            }
            if i != j {
                out[i * r + j] = v.clamp(PROB_EPS, 1.0 - PROB_EPS);
            }
        }
        Ok(WeightMatrix { n: r, w: out })
    }

    /// Exact 0/1 weights of a discrete graph.
    pub fn from_graph(g: &DirectedGraph) -> Self {
        WeightMatrix { n: g.n, w: g.adj.iter().map(|&e| if e { 1.0 } else { 0.0 }).collect() }
    }

    /// `PROB_EPS` / `1 - PROB_EPS` weights of a discrete graph.
    pub fn from_graph_clamped(g: &DirectedGraph) -> Self {
        let mut w = WeightMatrix::from_graph(g);
        for i in 0..w.n {
            for j in 0..w.n {
                if i != j {
                    w.w[i * w.n + j] = w.w[i * w.n + j].clamp(PROB_EPS, 1.0 - PROB_EPS);
                }
            }
        }
        w
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.w[u * self.n + v]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.n, self.n), self.w.clone()).expect("square")
    }

    pub fn remove_node(&self, z: usize) -> Result<(WeightMatrix, NodeMap)> {
        if z >= self.n {
            return Err(Error::domain(format!("node {z} out of range for {} nodes", self.n)));
        }
        let map = NodeMap::without(self.n, z);
        let m = self.n - 1;
        let mut w = vec![0.0; m * m];
        for (i, &oi) in map.kept.iter().enumerate() {
            for (j, &oj) in map.kept.iter().enumerate() {
                w[i * m + j] = self.get(oi, oj);
            }
        }
        Ok((WeightMatrix { n: m, w }, map))
    }
}

/// The order-0 pairs `(x, y), x > y` and order-1 triples `(x, y, z), x > y, z ∉ {x, y}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryIndexSets {
    pub order0: Vec<(usize, usize)>,
    pub order1: Vec<(usize, usize, usize)>,
}

impl QueryIndexSets {
    pub fn new(d: usize) -> Self {
        let mut order0 = Vec::with_capacity(d * d.saturating_sub(1) / 2);
        let mut order1 = Vec::new();
        for x in 0..d {
            for y in 0..x {
                order0.push((x, y));
                for z in 0..d {
                    if z != x && z != y {
                        order1.push((x, y, z));
                    }
                }
            }
        }
        QueryIndexSets { order0, order1 }
    }
}

/// Reachability by directed paths of length at most `max_len` (Bellman-Ford
/// style boolean recursion). The diagonal is always set.
pub fn reach_discrete(g: &DirectedGraph, max_len: usize) -> Array2<bool> {
    let n = g.n;
    let mut r = Array2::from_shape_fn((n, n), |(x, y)| x == y);
    for _ in 0..max_len {
        let next = Array2::from_shape_fn((n, n), |(x, y)| r[[x, y]] || (0..n).any(|u| r[[x, u]] && g.has_edge(u, y)));
        if next == r {
            break;
        }
        r = next;
    }
    r
}

/// Precomputed reachability of a DAG and of every single-node-deleted
/// subgraph; answers order-0/1 d-separation queries.
#[derive(Clone, Debug)]
pub struct DiscreteSeparation {
    n: usize,
    reach: Array2<bool>,
    /// `sub_dsep0[z]` holds order-0 separation on the graph without `z`,
    /// indexed by original labels.
    sub_dsep0: Vec<Array2<bool>>,
}

impl DiscreteSeparation {
    pub fn new(dag: &BinaryDag) -> Self {
        let n = dag.n_nodes();
        let reach = reach_discrete(dag.graph(), n.saturating_sub(1));
        let sub_dsep0 = (0..n)
            .map(|z| {
                let (sub, map) = dag.graph().remove_node(z).expect("valid node");
                let sr = reach_discrete(&sub, n.saturating_sub(2));
                let sep = dsep0_table(&sr);
                Array2::from_shape_fn((n, n), |(x, y)| match (map.to_new(x), map.to_new(y)) {
                    (Some(a), Some(b)) => sep[[a, b]],
                    _ => false,
                })
            })
            .collect();
        DiscreteSeparation { n, reach, sub_dsep0 }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn reaches(&self, x: usize, y: usize) -> bool {
        self.reach[[x, y]]
    }

    pub fn dsep0(&self, x: usize, y: usize) -> Result<bool> {
        self.check(&[x, y])?;
        Ok((0..self.n).all(|a| !(self.reach[[a, x]] && self.reach[[a, y]])))
    }

    pub fn dsep1(&self, x: usize, y: usize, z: usize) -> Result<bool> {
        self.check(&[x, y, z])?;
        let sub = &self.sub_dsep0[z];
        if !sub[[x, y]] {
            return Ok(false);
        }
        let side = |v: usize| (0..self.n).filter(|&a| a != z).all(|a| sub[[v, a]] || !self.reach[[a, z]]);
        Ok(side(x) || side(y))
    }

    pub fn dcon0(&self, x: usize, y: usize) -> Result<bool> {
        self.dsep0(x, y).map(|s| !s)
    }

    pub fn dcon1(&self, x: usize, y: usize, z: usize) -> Result<bool> {
        self.dsep1(x, y, z).map(|s| !s)
    }

    fn check(&self, nodes: &[usize]) -> Result<()> {
        for (i, &a) in nodes.iter().enumerate() {
            if a >= self.n {
                return Err(Error::domain(format!("node {a} out of range for {} nodes", self.n)));
            }
            if nodes[..i].contains(&a) {
                return Err(Error::domain(format!("query nodes {nodes:?} are not distinct")));
            }
        }
        Ok(())
    }
}

fn dsep0_table(reach: &Array2<bool>) -> Array2<bool> {
    let n = reach.nrows();
    Array2::from_shape_fn((n, n), |(x, y)| (0..n).all(|a| !(reach[[a, x]] && reach[[a, y]])))
}

/// `x ⊥ y` in `dag`: no common ancestor (every node is its own ancestor).
pub fn dsep0_discrete(dag: &BinaryDag, x: usize, y: usize) -> Result<bool> {
    if x == y {
        return Err(Error::domain("order-0 query needs x != y"));
    }
    let n = dag.n_nodes();
    if x >= n || y >= n {
        return Err(Error::domain(format!("query ({x},{y}) out of range")));
    }
    let r = reach_discrete(dag.graph(), n.saturating_sub(1));
    Ok((0..n).all(|a| !(r[[a, x]] && r[[a, y]])))
}

/// `x ⊥ y | z` in `dag`.
pub fn dsep1_discrete(dag: &BinaryDag, x: usize, y: usize, z: usize) -> Result<bool> {
    DiscreteSeparation::new(dag).dsep1(x, y, z)
}

pub fn dcon0_discrete(dag: &BinaryDag, x: usize, y: usize) -> Result<bool> {
    dsep0_discrete(dag, x, y).map(|s| !s)
}

pub fn dcon1_discrete(dag: &BinaryDag, x: usize, y: usize, z: usize) -> Result<bool> {
    dsep1_discrete(dag, x, y, z).map(|s| !s)
}
