//! Soft and discrete separation scores against independent references:
//! path-enumeration d-separation and brute-force edge percolation.

mod common;

use common::{formulas, random_dag, random_weights};
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softsep::diffsep::{soft_reach, soft_scores, soft_unreach, ScoreConfig, SeparationStatements};
use softsep::graph::oracle::oracle_dsep;
use softsep::graph::{DirectedGraph, DiscreteSeparation, WeightMatrix};
use softsep::logic::Temperature;

#[test]
fn closed_forms_match_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let alpha = Temperature::new(1e-5).unwrap();
    for _ in 0..80 {
        let d = rng.random_range(3..=7);
        let dag = random_dag(d, rng.random_range(0.1..0.7), &mut rng);
        let disc = DiscreteSeparation::new(&dag);
        let soft = SeparationStatements::new(&WeightMatrix::from_graph(dag.graph()), &ScoreConfig::new(alpha));
        for x in 0..d {
            for y in (0..d).filter(|&y| y != x) {
                let truth = oracle_dsep(&dag, x, y, &[]).unwrap();
                assert_eq!(disc.dsep0(x, y).unwrap(), truth, "{dag:?} ({x},{y})");
                assert_eq!(soft.sep0(x, y), truth, "{dag:?} soft ({x},{y})");
                for z in (0..d).filter(|&z| z != x && z != y) {
                    let truth = oracle_dsep(&dag, x, y, &[z]).unwrap();
                    assert_eq!(disc.dsep1(x, y, z).unwrap(), truth, "{dag:?} ({x},{y}|{z})");
                    assert_eq!(soft.sep1(x, y, z), truth, "{dag:?} soft ({x},{y}|{z})");
                }
            }
        }
    }
}

/// Exact probabilities of each statement when every edge is an independent
/// coin with the matrix's weight.
struct Percolation {
    reach: Array2<f64>,
    dsep0: Array2<f64>,
    dsep1: Array3<f64>,
}

fn percolate(w: &WeightMatrix) -> Percolation {
    let d = w.n_nodes();
    let pairs: Vec<(usize, usize)> =
        (0..d).flat_map(|u| (0..d).filter(move |&v| v != u).map(move |v| (u, v))).collect();
    let mut out =
        Percolation { reach: Array2::zeros((d, d)), dsep0: Array2::zeros((d, d)), dsep1: Array3::zeros((d, d, d)) };
    for mask in 0u32..1 << pairs.len() {
        let mut g = DirectedGraph::empty(d);
        let mut p = 1.0;
        for (k, &(u, v)) in pairs.iter().enumerate() {
            if mask >> k & 1 == 1 {
                g.add_edge(u, v).unwrap();
                p *= w.get(u, v);
            } else {
                p *= 1.0 - w.get(u, v);
            }
        }
        let f = formulas(&g);
        for x in 0..d {
            for y in 0..d {
                out.reach[[x, y]] += p * f64::from(u8::from(f.reach[[x, y]]));
                out.dsep0[[x, y]] += p * f64::from(u8::from(f.dsep0[[x, y]]));
                for z in 0..d {
                    out.dsep1[[x, y, z]] += p * f64::from(u8::from(f.dsep1[z][[x, y]]));
                }
            }
        }
    }
    out
}

#[test]
fn soft_scores_lower_bound_percolation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let slack = 1e-9;
    for trial in 0..24 {
        let d = if trial % 6 == 0 { 4 } else { 3 };
        let w = random_weights(d, 0.0, 1.0, &mut rng);
        let exact = percolate(&w);
        for a in [1.0, 0.05] {
            let alpha = Temperature::new(a).unwrap();
            let r = soft_reach(&w, d - 1, alpha);
            let u = soft_unreach(&w, d - 1, alpha);
            let s = soft_scores(&w, alpha);
            for x in 0..d {
                for y in (0..d).filter(|&y| y != x) {
                    let pr = exact.reach[[x, y]];
                    assert!(r[[x, y]].prob() <= pr + slack, "reach ({x},{y}) {w:?}");
                    assert!(u[[x, y]].prob() <= 1.0 - pr + slack, "unreach ({x},{y}) {w:?}");
                    let ps = exact.dsep0[[x, y]];
                    assert!(s.dsep0(x, y).unwrap().prob() <= ps + slack, "dsep0 ({x},{y})");
                    assert!(s.dcon0(x, y).unwrap().prob() <= 1.0 - ps + slack, "dcon0 ({x},{y})");
                    for z in (0..d).filter(|&z| z != x && z != y) {
                        let ps = exact.dsep1[[x, y, z]];
                        assert!(s.dsep1(x, y, z).unwrap().prob() <= ps + slack, "dsep1 ({x},{y}|{z})");
                        assert!(s.dcon1(x, y, z).unwrap().prob() <= 1.0 - ps + slack, "dcon1 ({x},{y}|{z})");
                    }
                }
            }
        }
    }
}

/// Each disjunction costs `alpha ln 2` in log space, so the scores sit a
/// little below certainty even at `alpha = 1e-5`.
#[test]
fn near_binary_weights_give_near_certain_scores() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let alpha = Temperature::new(1e-5).unwrap();
    for _ in 0..20 {
        let dag = random_dag(5, 0.4, &mut rng);
        let disc = DiscreteSeparation::new(&dag);
        let s = soft_scores(&WeightMatrix::from_graph(dag.graph()), alpha);
        for x in 0..5 {
            for y in (0..5).filter(|&y| y != x) {
                let want = if disc.dsep0(x, y).unwrap() { 1.0 } else { 0.0 };
                assert!(
                    (s.dsep0(x, y).unwrap().prob() - want).abs() < 1e-2,
                    "{dag:?} ({x},{y}) {} {want}",
                    s.dsep0(x, y).unwrap().prob()
                );
                assert!((s.dcon0(x, y).unwrap().prob() - (1.0 - want)).abs() < 1e-2);
            }
        }
    }
}
