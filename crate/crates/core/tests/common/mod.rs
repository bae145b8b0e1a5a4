//! Shared generators and reference computations for the integration tests.

#![allow(dead_code)]

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use softsep::graph::{reach_discrete, BinaryDag, DirectedGraph, WeightMatrix};

/// Random DAG: a shuffled order with each forward pair present w.p. `p`.
pub fn random_dag<R: Rng>(d: usize, p: f64, rng: &mut R) -> BinaryDag {
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            if rng.random_bool(p) {
                edges.push((order[i], order[j]));
            }
        }
    }
    BinaryDag::from_edges(d, &edges).unwrap()
}

/// Random directed graph, cycles allowed.
pub fn random_digraph<R: Rng>(d: usize, p: f64, rng: &mut R) -> DirectedGraph {
    let mut g = DirectedGraph::empty(d);
    for u in 0..d {
        for v in 0..d {
            if u != v && rng.random_bool(p) {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}

/// Off-diagonal weights drawn uniformly from `[lo, hi]`.
pub fn random_weights<R: Rng>(d: usize, lo: f64, hi: f64, rng: &mut R) -> WeightMatrix {
    let w = Array2::from_shape_fn((d, d), |(i, j)| if i == j { 0.0 } else { rng.random_range(lo..=hi) });
    WeightMatrix::from_probabilities(&w).unwrap()
}

/// The closed-form order-0/1 statements evaluated on any directed graph,
/// cycles included. Index `[x][y]` / `[x][y][z]`.
pub struct Formulas {
    pub reach: Array2<bool>,
    pub dsep0: Array2<bool>,
    pub dsep1: Vec<Array2<bool>>,
}

fn sep0_table(reach: &Array2<bool>) -> Array2<bool> {
    let n = reach.nrows();
    Array2::from_shape_fn((n, n), |(x, y)| (0..n).all(|a| !(reach[[a, x]] && reach[[a, y]])))
}

pub fn formulas(g: &DirectedGraph) -> Formulas {
    let n = g.n_nodes();
    let reach = reach_discrete(g, n);
    let dsep0 = sep0_table(&reach);
    let dsep1 = (0..n)
        .map(|z| {
            let (sub, map) = g.remove_node(z).unwrap();
            let s = sep0_table(&reach_discrete(&sub, n));
            let sub_sep = |a: usize, b: usize| match (map.to_new(a), map.to_new(b)) {
                (Some(i), Some(j)) => s[[i, j]],
                _ => false,
            };
            Array2::from_shape_fn((n, n), |(x, y)| {
                if x == y || x == z || y == z || !sub_sep(x, y) {
                    return false;
                }
                let side = |v: usize| (0..n).filter(|&a| a != z).all(|a| sub_sep(v, a) || !reach[[a, z]]);
                side(x) || side(y)
            })
        })
        .collect();
    Formulas { reach, dsep0, dsep1 }
}

/// Kolmogorov-Smirnov test of `xs` against Uniform(0, 1): `(D, p-value)`,
/// with the Stephens small-sample correction to the asymptotic law.
pub fn ks_uniform(xs: &[f64]) -> (f64, f64) {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let d = v.iter().enumerate().map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n)).fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    (d, p.clamp(0.0, 1.0))
}
