//! Distributional checks of the benchmark generators.

mod common;

use common::random_dag;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use softsep::datagen::{ancestral_sample, gen_cpts, gen_er_dag, gen_sf_dag, BayesNetBinary};
use softsep::graph::BinaryDag;

#[test]
fn er_mean_edge_count_is_binomial() {
    let (d, r, seeds) = (10, 2.0, 1000);
    let pairs = (d * (d - 1) / 2) as f64;
    let p = r / d as f64;
    let total: usize = (0..seeds).map(|s| gen_er_dag(d, r, s).unwrap().n_edges()).sum();
    let mean = total as f64 / seeds as f64;
    let se = (pairs * p * (1.0 - p) / seeds as f64).sqrt();
    assert!((mean - pairs * p).abs() <= 3.0 * se, "mean {mean}");
}

fn max_degree(g: &BinaryDag) -> usize {
    let mut deg = vec![0; g.n_nodes()];
    for (u, v) in g.edges() {
        deg[u] += 1;
        deg[v] += 1;
    }
    deg.into_iter().max().unwrap_or(0)
}

#[test]
fn scale_free_has_heavier_hubs() {
    let wins = (0..200)
        .filter(|&s| max_degree(&gen_er_dag(50, 2.0, s).unwrap()) < max_degree(&gen_sf_dag(50, 2.0, s).unwrap()))
        .count();
    assert!(wins >= 160, "SF hub larger in only {wins}/200 seeds");
}

#[test]
fn generated_graphs_are_acyclic_and_sized() {
    for s in 0..50 {
        let sf = gen_sf_dag(30, 4.0, s).unwrap();
        assert!(sf.is_acyclic());
        // Star on m + 1 nodes, then m edges per later node.
        assert_eq!(sf.n_edges(), 2 + 2 * (30 - 3));
        assert!(gen_er_dag(30, 3.0, s).unwrap().is_acyclic());
    }
}

#[test]
fn cpt_entries_are_uniform_on_range() {
    let full = BinaryDag::from_edges(13, &(0..12).map(|u| (u, 12)).collect::<Vec<_>>()).unwrap();
    let mut entries = Vec::new();
    for s in 0..25 {
        entries.extend_from_slice(gen_cpts(&full, s).unwrap().cpt(12));
    }
    let n = entries.len() as f64;
    assert!(n >= 1e5);
    let mean = entries.iter().sum::<f64>() / n;
    let sd = 0.6 / 12f64.sqrt();
    assert!((mean - 0.5).abs() <= 3.0 * sd / n.sqrt(), "mean {mean}");
    assert!(entries.iter().all(|p| (0.2..=0.8).contains(p)));
}

#[test]
fn root_frequency_matches_probability() {
    let net = BayesNetBinary::new(BinaryDag::empty(1), vec![vec![0.5]]).unwrap();
    let n = 100_000;
    let data = ancestral_sample(&net, n, 4).unwrap();
    let ones: f64 = data.column(0).iter().sum();
    assert!((ones - 0.5 * n as f64).abs() <= 3.0 * (n as f64 * 0.25).sqrt());
}

#[test]
fn edge_extreme_chain_is_positively_correlated() {
    let dag = BinaryDag::from_edges(2, &[(0, 1)]).unwrap();
    let net = BayesNetBinary::new(dag, vec![vec![0.5], vec![0.2, 0.8]]).unwrap();
    let data = ancestral_sample(&net, 20_000, 1).unwrap();
    let (a, b) = (data.column(0), data.column(1));
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
    assert!(cov > 0.05, "cov {cov}");
}

#[test]
fn joint_law_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = 6;
    let net = gen_cpts(&random_dag(d, 0.5, &mut rng), 3).unwrap();
    let mut exact = vec![0.0; 1 << d];
    for (code, slot) in exact.iter_mut().enumerate() {
        let x: Vec<u8> = (0..d).map(|i| (code >> i & 1) as u8).collect();
        *slot = (0..d)
            .map(|v| {
                let p = net.cpt(v)[net.config_index(v, &x)];
                if x[v] == 1 {
                    p
                } else {
                    1.0 - p
                }
            })
            .product();
    }
    let n = 1_000_000;
    let data = ancestral_sample(&net, n, 8).unwrap();
    let mut counts = vec![0u32; 1 << d];
    for r in 0..n {
        let code = (0..d).fold(0, |c, i| c | (data.column(i)[r] as usize) << i);
        counts[code] += 1;
    }
    let tv: f64 = exact.iter().zip(&counts).map(|(p, &c)| (p - f64::from(c) / n as f64).abs()).sum::<f64>() / 2.0;
    assert!(tv < 0.01, "total variation {tv}");
}

#[test]
fn same_seed_same_data() {
    let net = gen_cpts(&gen_er_dag(8, 2.0, 1).unwrap(), 2).unwrap();
    let a = ancestral_sample(&net, 500, 3).unwrap();
    let b = ancestral_sample(&net, 500, 3).unwrap();
    assert_eq!(a.content_hash(), b.content_hash());
    assert_ne!(a.content_hash(), ancestral_sample(&net, 500, 4).unwrap().content_hash());
}
