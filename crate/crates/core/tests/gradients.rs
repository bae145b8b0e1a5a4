//! Loss gradients against central finite differences, and the acyclicity
//! loss on matrices of known structure.

mod common;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softsep::ci::CiTable;
use softsep::objective::{dag_loss, loss_suite, LossConfig, Task};

const H: f64 = 1e-5;

fn random_table<R: Rng>(d: usize, rng: &mut R) -> CiTable {
    let mut p = || rng.random::<f64>();
    let p0: Vec<f64> = (0..d * d).map(|_| p()).collect();
    let p1: Vec<f64> = (0..d * d * d).map(|_| p()).collect();
    CiTable::from_fn(d, |x, y| p0[x * d + y], |x, y, z| p1[(x * d + y) * d + z]).unwrap()
}

/// Logits whose weights keep `sI - W` comfortably inside the domain.
fn random_theta<R: Rng>(d: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_fn((d, d), |(i, j)| if i == j { 0.0 } else { rng.random_range(-3.0..1.5) })
}

/// Largest norm-wise relative error between the analytic gradient and
/// central differences, over the five losses.
fn worst_relative_error(theta: &Array2<f64>, table: &CiTable, cfg: &LossConfig) -> f64 {
    let d = theta.nrows();
    let base = loss_suite(theta, table, cfg).unwrap();
    assert!(base.dag_in_domain());
    let mut fd = vec![Array2::<f64>::zeros((d, d)); 5];
    for i in 0..d {
        for j in (0..d).filter(|&j| j != i) {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[[i, j]] += H;
            minus[[i, j]] -= H;
            let (lp, lm) = (loss_suite(&plus, table, cfg).unwrap(), loss_suite(&minus, table, cfg).unwrap());
            for t in 0..5 {
                fd[t][[i, j]] = (lp.values[t] - lm.values[t]) / (2.0 * H);
            }
        }
    }
    Task::ALL
        .iter()
        .map(|&t| {
            let an = base.grad(t);
            let num = &fd[t as usize];
            let diff = (an - num).mapv(|v| v * v).sum().sqrt();
            let scale = an.mapv(|v| v * v).sum().sqrt().max(num.mapv(|v| v * v).sum().sqrt());
            if scale < 1e-8 {
                diff
            } else {
                diff / scale
            }
        })
        .fold(0.0, f64::max)
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let d = 5;
    for k in 0..6 {
        let table = random_table(d, &mut rng);
        let theta = random_theta(d, &mut rng);
        let cfg = if k % 2 == 0 { LossConfig::new(d) } else { LossConfig::unnormalized(d) };
        let err = worst_relative_error(&theta, &table, &cfg);
        assert!(err < 1e-4, "trial {k}: relative error {err:e}");
    }
}

/// Strictly upper-triangular in a shuffled order.
fn permuted_triangular<R: Rng>(d: usize, rng: &mut R) -> Array2<f64> {
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let mut w = Array2::zeros((d, d));
    for a in 0..d {
        for b in a + 1..d {
            w[[order[a], order[b]]] = rng.random::<f64>();
        }
    }
    w
}

#[test]
fn dag_loss_vanishes_exactly_on_acyclic_supports() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let d = rng.random_range(2..9);
        let w = permuted_triangular(d, &mut rng);
        assert!(dag_loss(&w, 3.0).unwrap().abs() < 1e-8);
    }
}

#[test]
fn dag_loss_detects_two_cycles() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..30 {
        let d = rng.random_range(3..8);
        let mut w = permuted_triangular(d, &mut rng).mapv(|v| v * 0.2);
        let (u, v) = (0, rng.random_range(1..d));
        w[[u, v]] = rng.random_range(0.3..1.0);
        w[[v, u]] = rng.random_range(0.3..1.0);
        let loss = dag_loss(&w, 3.0).unwrap();
        assert!(loss > 1e-3, "loss {loss}");
    }
    // Spectral radius above s leaves the domain.
    let full = Array2::from_shape_fn((6, 6), |(i, j)| if i == j { 0.0 } else { 0.9 });
    assert!(dag_loss(&full, 3.0).is_none());
}
