//! Statistical checks of the discrete Langevin proposal and the
//! Metropolis-Hastings correction.

use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softsep::sampler::{dlp_propose, entry_log_probs, log_proposal_prob, mh_accept, LogitState, Support};

#[test]
fn proposal_frequencies_match_categorical() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let support = Support::default();
    let mut state = LogitState::neutral(3, support.clone());
    state.set_index(0, 1, 0);
    state.set_index(2, 1, 2);
    let grad = array![[0.0, 1.5, -0.7], [0.3, 0.0, 2.0], [-1.1, -2.5, 0.0]];
    let beta = 0.8;
    let n = 100_000;
    let mut counts = Array2::<[u32; 3]>::from_elem((3, 3), [0; 3]);
    for _ in 0..n {
        let (next, _) = dlp_propose(&state, &grad, beta, &mut rng).unwrap();
        for i in 0..3 {
            for j in (0..3).filter(|&j| j != i) {
                counts[[i, j]][next.index(i, j)] += 1;
            }
        }
    }
    let mut logp = Vec::new();
    for i in 0..3 {
        for j in (0..3).filter(|&j| j != i) {
            entry_log_probs(state.get(i, j), grad[[i, j]], beta, support.values(), &mut logp);
            for (k, l) in logp.iter().enumerate() {
                let p = l.exp();
                let sigma = (n as f64 * p * (1.0 - p)).sqrt();
                let got = f64::from(counts[[i, j]][k]);
                assert!(
                    (got - n as f64 * p).abs() <= 3.0 * sigma,
                    "entry ({i},{j}) value {k}: {got} vs {}",
                    n as f64 * p
                );
            }
        }
    }
}

/// Hand-picked energies over the nine states of a 2-node logit matrix.
fn energy(s: &LogitState) -> f64 {
    const U: [[f64; 3]; 3] = [[0.4, 1.3, 2.0], [0.0, 0.9, 1.7], [1.1, 0.2, 2.6]];
    U[s.index(0, 1)][s.index(1, 0)]
}

/// Any deterministic gradient field works: the acceptance test corrects for
/// it. This one is a clamped forward difference of the energy.
fn grad(s: &LogitState) -> Array2<f64> {
    let mut g = Array2::zeros((2, 2));
    for (i, j) in [(0, 1), (1, 0)] {
        let k = s.index(i, j);
        let mut up = s.clone();
        up.set_index(i, j, (k + 1).min(2));
        let mut down = s.clone();
        down.set_index(i, j, k.saturating_sub(1));
        g[[i, j]] = (energy(&up) - energy(&down)) / 4.0;
    }
    g
}

#[test]
fn chain_has_boltzmann_stationary_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let support = Support::default();
    let beta = 1.5;
    let (chains, steps) = (20_000, 40);
    let mut counts = [[0u32; 3]; 3];
    for _ in 0..chains {
        let mut s = LogitState::neutral(2, support.clone());
        s.set_index(0, 1, rng.random_range(0..3));
        s.set_index(1, 0, rng.random_range(0..3));
        for _ in 0..steps {
            let g = grad(&s);
            let (prop, lq_fwd) = dlp_propose(&s, &g, beta, &mut rng).unwrap();
            let lq_rev = log_proposal_prob(&prop, &s, &grad(&prop), beta).unwrap();
            if mh_accept(energy(&s), energy(&prop), lq_fwd, lq_rev, &mut rng) {
                s = prop;
            }
        }
        counts[s.index(0, 1)][s.index(1, 0)] += 1;
    }
    let mut probe = LogitState::neutral(2, support);
    let mut z = 0.0;
    let mut weights = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            probe.set_index(0, 1, a);
            probe.set_index(1, 0, b);
            weights[a][b] = (-energy(&probe)).exp();
            z += weights[a][b];
        }
    }
    let n = f64::from(chains);
    for a in 0..3 {
        for b in 0..3 {
            let p = weights[a][b] / z;
            let sigma = (n * p * (1.0 - p)).sqrt();
            let got = f64::from(counts[a][b]);
            assert!((got - n * p).abs() <= 3.0 * sigma, "state ({a},{b}): {got} vs {}", n * p);
        }
    }
}

#[test]
fn vanishing_step_size_stays_put() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let state = LogitState::neutral(4, Support::default());
    let grad = Array2::from_elem((4, 4), 3.0);
    let (next, lq) = dlp_propose(&state, &grad, 1e-4, &mut rng).unwrap();
    assert_eq!(next, state);
    assert!(lq.abs() < 1e-12);
}
