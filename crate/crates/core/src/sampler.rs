//! Gradient-informed discrete sampling over logit matrices.
//!
//! Each off-diagonal logit lives on a small finite support. A step projects
//! the five task gradients against each other (PCGrad), draws a discrete
//! Langevin proposal entry by entry, and accepts it with a
//! Metropolis-Hastings test on the summed losses. Because the projected
//! gradient is not the gradient of the energy, the chain is not guaranteed to
//! be reversible with respect to `exp(-U)`; the acceptance test is applied
//! exactly as written regardless.

use std::collections::HashMap;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ci::CiTable;
use crate::error::{Error, Result};
use crate::graph::{feedback_arc_prune, BinaryDag, DirectedGraph};
use crate::logic::Temperature;
use crate::objective::{
    default_s, energy, LossConfig, LossVector, Objective, DEFAULT_ALPHA_TRAIN, DEFAULT_MAX_PATH_LEN,
};
use crate::select::{tptn_ratio, DagCandidate, DEFAULT_ALPHA_EVAL};

pub const DEFAULT_SUPPORT: [f64; 3] = [-2.0, 0.0, 2.0];
pub const DEFAULT_BETA: f64 = 0.8;
pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_TOPK: usize = 5;
/// Steps excluded from the acceptance-rate diagnostic.
pub const WARMUP_STEPS: usize = 100;
const LOG_EVERY: usize = 50;
const RATE_WARN_LOW: f64 = 0.02;
const RATE_WARN_HIGH: f64 = 0.98;

/// Sorted, distinct logit values with at least one negative and one positive.
#[derive(Clone, Debug, PartialEq)]
pub struct Support(Vec<f64>);

impl Support {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("support values must be finite".into()));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        if values.len() > u8::MAX as usize {
            return Err(Error::Config("support has too many values".into()));
        }
        match (values.first(), values.last()) {
            (Some(&lo), Some(&hi)) if lo < 0.0 && hi > 0.0 => Ok(Support(values)),
            _ => Err(Error::Config(format!("support {values:?} needs min < 0 < max"))),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the value closest to zero (the smaller one on a tie).
    pub fn nearest_zero(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.0.iter().enumerate() {
            if v.abs() < self.0[best].abs() {
                best = i;
            }
        }
        best
    }
}

impl Default for Support {
    fn default() -> Self {
        Support(DEFAULT_SUPPORT.to_vec())
    }
}

/// A `d x d` logit matrix whose off-diagonal entries are support values.
/// Entries are stored as support indices; the diagonal is unused.
#[derive(Clone, Debug, PartialEq)]
pub struct LogitState {
    d: usize,
    support: Support,
    idx: Vec<u8>,
}

impl LogitState {
    pub fn filled(d: usize, support: Support, index: usize) -> Result<Self> {
        if index >= support.len() {
            return Err(Error::domain(format!("support index {index} out of range")));
        }
        Ok(LogitState { d, support, idx: vec![index as u8; d * d] })
    }

    /// Every entry at the support value nearest zero.
    pub fn neutral(d: usize, support: Support) -> Self {
        let i = support.nearest_zero();
        LogitState::filled(d, support, i).expect("index in range")
    }

    pub fn n_nodes(&self) -> usize {
        self.d
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        self.idx[i * self.d + j] as usize
    }

    pub fn set_index(&mut self, i: usize, j: usize, k: usize) {
        assert!(k < self.support.len(), "support index out of range");
        self.idx[i * self.d + j] = k as u8;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.support.0[self.index(i, j)]
        }
    }

    pub fn theta(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.d, self.d), |(i, j)| self.get(i, j))
    }

    /// Edges where `sigmoid(theta) > 1/2`, i.e. `theta > 0`.
    pub fn threshold(&self) -> DirectedGraph {
        let mut g = DirectedGraph::empty(self.d);
        for i in 0..self.d {
            for j in (0..self.d).filter(|&j| j != i) {
                if self.get(i, j) > 0.0 {
                    g.add_edge(i, j).expect("off-diagonal");
                }
            }
        }
        g
    }
}

fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Sum of the task gradients after projecting out pairwise conflicts.
///
/// For each task `i` the other tasks are visited in a random order; whenever
/// the running `g_i` has a negative inner product with `g_j`, its component
/// along `g_j` is removed. Zero gradients are never projected onto.
pub fn pcgrad<R: Rng + ?Sized>(grads: &[Array2<f64>], rng: &mut R) -> Result<Array2<f64>> {
    let first = grads.first().ok_or_else(|| Error::domain("PCGrad needs at least one gradient"))?;
    if grads.iter().any(|g| g.dim() != first.dim()) {
        return Err(Error::domain("PCGrad gradients differ in shape"));
    }
    let norms: Vec<f64> = grads.iter().map(|g| dot(g, g)).collect();
    let mut total = Array2::zeros(first.dim());
    let mut order: Vec<usize> = Vec::with_capacity(grads.len());
    for (i, gi) in grads.iter().enumerate() {
        let mut g = gi.clone();
        order.clear();
        order.extend((0..grads.len()).filter(|&j| j != i));
        order.shuffle(rng);
        for &j in &order {
            if norms[j] == 0.0 {
                continue;
            }
            let ip = dot(&g, &grads[j]);
            if ip < 0.0 {
                g.scaled_add(-ip / norms[j], &grads[j]);
            }
        }
        total += &g;
    }
    Ok(total)
}

/// Log-probabilities of moving one entry from `from` to each support value.
pub fn entry_log_probs(from: f64, grad: f64, beta: f64, support: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(support.iter().map(|&v| {
        let delta = from - v;
        0.5 * grad * delta - delta * delta / (2.0 * beta)
    }));
    let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + out.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    for l in out.iter_mut() {
        *l -= lse;
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("step size beta = {beta} must be positive")))
    }
}

/// Resamples every off-diagonal entry independently from its discrete
/// Langevin categorical. Returns the proposal and `ln q(proposal | state)`.
pub fn dlp_propose<R: Rng + ?Sized>(
    state: &LogitState,
    grad: &Array2<f64>,
    beta: f64,
    rng: &mut R,
) -> Result<(LogitState, f64)> {
    check_beta(beta)?;
    let d = state.d;
    if grad.dim() != (d, d) {
        return Err(Error::domain("gradient shape does not match the state"));
    }
    let support = state.support.values();
    let mut next = state.clone();
    let mut logp = Vec::with_capacity(support.len());
    let mut log_q = 0.0;
    for i in 0..d {
        for j in (0..d).filter(|&j| j != i) {
            entry_log_probs(state.get(i, j), grad[[i, j]], beta, support, &mut logp);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = support.len() - 1;
            for (k, l) in logp.iter().enumerate() {
                acc += l.exp();
                if u < acc {
                    pick = k;
                    break;
                }
            }
            next.set_index(i, j, pick);
            log_q += logp[pick];
        }
    }
    Ok((next, log_q))
}

/// `ln q(to | from)` under the proposal built from `grad` at `from`.
pub fn log_proposal_prob(from: &LogitState, to: &LogitState, grad: &Array2<f64>, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let d = from.d;
    if to.d != d || to.support != from.support || grad.dim() != (d, d) {
        return Err(Error::domain("states and gradient do not share a shape and support"));
    }
    let support = from.support.values();
    let mut logp = Vec::with_capacity(support.len());
    let mut log_q = 0.0;
    for i in 0..d {
        for j in (0..d).filter(|&j| j != i) {
            entry_log_probs(from.get(i, j), grad[[i, j]], beta, support, &mut logp);
            log_q += logp[to.index(i, j)];
        }
    }
    Ok(log_q)
}

/// Metropolis-Hastings test. A uniform is always drawn so the random stream
/// does not depend on the outcome.
pub fn mh_accept<R: Rng + ?Sized>(u_old: f64, u_new: f64, log_q_fwd: f64, log_q_rev: f64, rng: &mut R) -> bool {
    let u: f64 = rng.random();
    if u_new == f64::INFINITY || u_new.is_nan() {
        return false;
    }
    if u_old == f64::INFINITY {
        return true;
    }
    let log_ratio = u_old - u_new + log_q_rev - log_q_fwd;
    log_ratio >= 0.0 || u < log_ratio.exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub beta: f64,
    pub steps: usize,
    pub alpha_train: f64,
    pub alpha_eval: f64,
    /// Log-det scale; `None` picks the size-based default.
    pub s: Option<f64>,
    pub seed: u64,
    pub topk: usize,
    pub support: Vec<f64>,
    /// Path-length cap in the training scores; `None` means `d`.
    pub max_path_len: Option<usize>,
    /// Divide each CI loss by its number of queries.
    pub normalize_losses: bool,
    pub task_weights: [f64; 5],
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            beta: DEFAULT_BETA,
            steps: DEFAULT_STEPS,
            alpha_train: DEFAULT_ALPHA_TRAIN,
            alpha_eval: DEFAULT_ALPHA_EVAL,
            s: None,
            seed: 0,
            topk: DEFAULT_TOPK,
            support: DEFAULT_SUPPORT.to_vec(),
            max_path_len: Some(DEFAULT_MAX_PATH_LEN),
            normalize_losses: true,
            task_weights: [1.0; 5],
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.topk == 0 {
            return Err(Error::Config("topk must be at least 1".into()));
        }
        Temperature::new(self.alpha_train).map_err(|e| Error::Config(e.to_string()))?;
        Temperature::new(self.alpha_eval).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(s) = self.s {
            if !(s > 0.0) {
                return Err(Error::Config(format!("log-det scale s = {s} must be positive")));
            }
        }
        Support::new(self.support.clone())?;
        Ok(())
    }
}

/// One line of the chain trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub energy: f64,
    pub losses: [f64; 5],
    pub accepted: bool,
    pub acceptance_rate: f64,
    pub tptn_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct ChainRun {
    pub candidates: Vec<DagCandidate>,
    pub trace: Vec<TraceRecord>,
    pub acceptance_rate: f64,
    /// Acceptance rate over the steps after [`WARMUP_STEPS`], if any.
    pub post_warmup_rate: Option<f64>,
    pub warnings: Vec<String>,
    /// Whether the start state had to be moved into the log-det domain.
    pub reinitialized: bool,
    pub final_state: LogitState,
}

/// Runs one chain and returns a scored candidate per step.
///
/// Two ChaCha8 streams are derived from `cfg.seed`: stream 0 drives proposals
/// and acceptance tests, stream 1 the PCGrad task order.
pub fn run_chain(table: &CiTable, cfg: &ChainConfig) -> Result<ChainRun> {
    cfg.validate()?;
    let d = table.n_vars();
    let support = Support::new(cfg.support.clone())?;
    let loss_cfg = LossConfig {
        alpha: Temperature::new(cfg.alpha_train)?,
        s: cfg.s.unwrap_or_else(|| default_s(d)),
        weights: cfg.task_weights,
        normalize: cfg.normalize_losses,
        max_path_len: cfg.max_path_len,
    };
    let alpha_eval = Temperature::new(cfg.alpha_eval)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut proj_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    proj_rng.set_stream(1);

    let mut obj = Objective::new(table, loss_cfg)?;
    let mut warnings = Vec::new();
    let mut state = LogitState::neutral(d, support.clone());
    let mut losses = obj.evaluate(&state.theta())?;
    let mut reinitialized = false;
    if energy(&losses).is_infinite() {
        state = LogitState::filled(d, support, 0)?;
        losses = obj.evaluate(&state.theta())?;
        reinitialized = true;
        let msg = format!(
            "start state is outside the log-det domain (s = {}); restarting from every logit at {}",
            loss_cfg.s,
            state.get(0, 1.min(d.saturating_sub(1)))
        );
        log::warn!("{msg}");
        warnings.push(msg);
        if energy(&losses).is_infinite() {
            return Err(Error::Config(format!("no finite-energy start state; increase s (currently {})", loss_cfg.s)));
        }
    }
    let mut grad = pcgrad(&losses.grads, &mut proj_rng)?;

    let mut tptn_cache: HashMap<Vec<bool>, f64> = HashMap::new();
    let mut candidates = Vec::with_capacity(cfg.steps);
    let mut trace = Vec::with_capacity(cfg.steps);
    let mut n_accepted = 0usize;
    let mut warm_accepted = 0usize;

    for step in 1..=cfg.steps {
        let (proposal, log_q_fwd) = dlp_propose(&state, &grad, cfg.beta, &mut rng)?;
        let new_losses: LossVector = obj.evaluate(&proposal.theta())?;
        let (u_old, u_new) = (energy(&losses), energy(&new_losses));
        let (new_grad, log_q_rev) = if u_new.is_finite() {
            let g = pcgrad(&new_losses.grads, &mut proj_rng)?;
            let lq = log_proposal_prob(&proposal, &state, &g, cfg.beta)?;
            (Some(g), lq)
        } else {
            (None, f64::NEG_INFINITY)
        };
        let accepted = mh_accept(u_old, u_new, log_q_fwd, log_q_rev, &mut rng);
        if accepted {
            state = proposal;
            losses = new_losses;
            grad = new_grad.expect("accepted proposals have finite energy");
            n_accepted += 1;
            if step > WARMUP_STEPS {
                warm_accepted += 1;
            }
        }

        let dag = feedback_arc_prune(&state.threshold());
        let tptn = match tptn_cache.get(dag.adjacency()) {
            Some(&v) => v,
            None => {
                let v = tptn_ratio(&dag, table, alpha_eval)?;
                tptn_cache.insert(dag.adjacency().to_vec(), v);
                v
            }
        };
        let rate = n_accepted as f64 / step as f64;
        trace.push(TraceRecord {
            step,
            energy: energy(&losses),
            losses: losses.values,
            accepted,
            acceptance_rate: rate,
            tptn_ratio: tptn,
        });
        candidates.push(DagCandidate { dag, tptn, step });
        if step % LOG_EVERY == 0 {
            log::info!("step {step}: energy {:.4}, acceptance {:.3}, tptn {:.4}", energy(&losses), rate, tptn);
        }
    }

    let post_warmup_rate = (cfg.steps > WARMUP_STEPS).then(|| warm_accepted as f64 / (cfg.steps - WARMUP_STEPS) as f64);
    if let Some(r) = post_warmup_rate {
        if r < RATE_WARN_LOW {
            warnings.push(format!("acceptance rate {r:.3} after warmup is very low; try a smaller beta"));
        } else if r > RATE_WARN_HIGH {
            warnings.push(format!("acceptance rate {r:.3} after warmup is very high; try a larger beta"));
        }
    }
    for w in warnings.iter().skip(usize::from(reinitialized)) {
        log::warn!("{w}");
    }
    Ok(ChainRun {
        candidates,
        trace,
        acceptance_rate: n_accepted as f64 / cfg.steps as f64,
        post_warmup_rate,
        warnings,
        reinitialized,
        final_state: state,
    })
}

/// Convenience: the DAG encoded by a state after thresholding and pruning.
pub fn state_dag(state: &LogitState) -> BinaryDag {
    feedback_arc_prune(&state.threshold())
}
