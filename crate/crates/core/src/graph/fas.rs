use super::{BinaryDag, DirectedGraph};

/// Largest graph for which the minimum feedback arc set is found exactly.
pub const EXACT_FAS_MAX_NODES: usize = 12;

/// Removes a feedback arc set from `g`.
///
/// Graphs with at most [`EXACT_FAS_MAX_NODES`] nodes get a minimum-cardinality
/// set; larger graphs use the Eades-Lin-Smyth ordering heuristic.
pub fn feedback_arc_prune(g: &DirectedGraph) -> BinaryDag {
    let mut out = g.clone();
    for (u, v) in minimum_feedback_arc_set(g) {
        out.remove_edge(u, v);
    }
    BinaryDag::new(out).expect("removing back edges of a linear order leaves a DAG")
}

/// The arcs pointing backwards in a good linear order of `g`.
pub fn minimum_feedback_arc_set(g: &DirectedGraph) -> Vec<(usize, usize)> {
    if g.is_acyclic() {
        return Vec::new();
    }
    let order = if g.n_nodes() <= EXACT_FAS_MAX_NODES { exact_order(g) } else { eades_order(g) };
    let mut pos = vec![0; g.n_nodes()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    g.edges().filter(|&(u, v)| pos[u] > pos[v]).collect()
}

/// Subset DP over prefixes of the order: `best[S]` is the fewest back arcs
/// when the nodes of `S` come first.
fn exact_order(g: &DirectedGraph) -> Vec<usize> {
    let n = g.n_nodes();
    let out_mask: Vec<u32> =
        (0..n).map(|u| (0..n).filter(|&v| g.has_edge(u, v)).fold(0u32, |m, v| m | 1 << v)).collect();
    let full = (1usize << n) - 1;
    let mut best = vec![u32::MAX; full + 1];
    let mut last = vec![0u8; full + 1];
    best[0] = 0;
    for set in 0..full {
        if best[set] == u32::MAX {
            continue;
        }
        for v in 0..n {
            if set & (1 << v) != 0 {
                continue;
            }
            // Placing v after `set` makes its arcs into `set` point backwards.
            let cost = best[set] + (out_mask[v] & set as u32).count_ones();
            let next = set | (1 << v);
            if cost < best[next] {
                best[next] = cost;
                last[next] = v as u8;
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut set = full;
    while set != 0 {
        let v = last[set] as usize;
        order.push(v);
        set &= !(1 << v);
    }
    order.reverse();
    order
}

fn eades_order(g: &DirectedGraph) -> Vec<usize> {
    let n = g.n_nodes();
    let mut alive = vec![true; n];
    let mut indeg: Vec<isize> = (0..n).map(|v| g.parents(v).len() as isize).collect();
    let mut outdeg: Vec<isize> = (0..n).map(|v| g.children(v).len() as isize).collect();
    let mut head = Vec::new();
    let mut tail = Vec::new();
    let mut remaining = n;

    let remove = |v: usize, alive: &mut Vec<bool>, indeg: &mut Vec<isize>, outdeg: &mut Vec<isize>| {
        alive[v] = false;
        for w in 0..n {
            if alive[w] {
                if g.has_edge(v, w) {
                    indeg[w] -= 1;
                }
                if g.has_edge(w, v) {
                    outdeg[w] -= 1;
                }
            }
        }
    };

    while remaining > 0 {
        while let Some(v) = (0..n).find(|&v| alive[v] && outdeg[v] == 0) {
            remove(v, &mut alive, &mut indeg, &mut outdeg);
            tail.push(v);
            remaining -= 1;
        }
        while let Some(v) = (0..n).find(|&v| alive[v] && indeg[v] == 0) {
            remove(v, &mut alive, &mut indeg, &mut outdeg);
            head.push(v);
            remaining -= 1;
        }
        if remaining > 0 {
            let v = (0..n)
                .filter(|&v| alive[v])
                .max_by_key(|&v| (outdeg[v] - indeg[v], std::cmp::Reverse(v)))
                .expect("a node remains");
            remove(v, &mut alive, &mut indeg, &mut outdeg);
            head.push(v);
            remaining -= 1;
        }
    }
    tail.reverse();
    head.extend(tail);
    head
}
