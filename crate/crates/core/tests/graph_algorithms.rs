//! Feedback-arc pruning against brute force over all linear orders.

mod common;

use common::random_digraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softsep::graph::{feedback_arc_prune, minimum_feedback_arc_set, DirectedGraph};

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn brute_force_fas(g: &DirectedGraph) -> usize {
    let n = g.n_nodes();
    permutations(n)
        .iter()
        .map(|order| {
            let mut pos = vec![0; n];
            for (i, &v) in order.iter().enumerate() {
                pos[v] = i;
            }
            g.edges().filter(|&(u, v)| pos[u] > pos[v]).count()
        })
        .min()
        .unwrap()
}

#[test]
fn exact_fas_is_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..120 {
        let n = rng.random_range(2..=6);
        let g = random_digraph(n, rng.random_range(0.1..0.8), &mut rng);
        let fas = minimum_feedback_arc_set(&g);
        assert_eq!(fas.len(), brute_force_fas(&g), "{g:?}");
        let pruned = feedback_arc_prune(&g);
        assert!(pruned.is_acyclic());
        assert_eq!(pruned.n_edges() + fas.len(), g.n_edges());
        assert!(pruned.edges().all(|(u, v)| g.has_edge(u, v)));
    }
}

#[test]
fn heuristic_fas_leaves_a_dag() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let g = random_digraph(20, 0.2, &mut rng);
        let pruned = feedback_arc_prune(&g);
        assert!(pruned.is_acyclic());
        assert!(pruned.edges().all(|(u, v)| g.has_edge(u, v)));
    }
}

#[test]
fn acyclic_input_is_untouched() {
    let g = DirectedGraph::from_edges(4, &[(0, 1), (1, 2), (0, 3)]).unwrap();
    assert!(minimum_feedback_arc_set(&g).is_empty());
    assert_eq!(feedback_arc_prune(&g).graph(), &g);
}
