//! The five training losses and the sampler's energy.
//!
//! With `W = sigmoid(theta)` (diagonal forced to zero) and scores built at the
//! training temperature:
//!
//! ```text
//! tp0 = -sum_{(x,y)}   S0(x,y)   * p(x,y)
//! tn0 = -sum_{(x,y)}   C0(x,y)   * (M0 - p(x,y))
//! tp1 = -sum_{(x,y,z)} S1(x,y|z) * p(x,y|z)
//! tn1 = -sum_{(x,y,z)} C1(x,y|z) * (M1 - p(x,y|z))
//! dag = -ln det(sI - W) + d ln s
//! ```
//!
//! By default each of the four CI losses is divided by its number of queries
//! (`|I0| = d(d-1)/2`, `|I1| = d(d-1)(d-2)/2`), and the reachability horizon
//! is capped at [`DEFAULT_MAX_PATH_LEN`]; both can be switched off to get the
//! plain sums over full-length paths. Optional per-task weights scale each
//! loss and its gradient on top.

use std::fmt;

use ndarray::Array2;

use crate::ci::CiTable;
use crate::diffsep::{build_scores, Families, LogWeights};
use crate::error::{Error, Result};
use crate::logic::{Temperature, NEG_INF, PROB_EPS};
use crate::tape::{lu_log_det, GradientTape, Var};

pub const DEFAULT_ALPHA_TRAIN: f64 = 0.01;

/// Default cap on path length in the training scores.
pub const DEFAULT_MAX_PATH_LEN: usize = 2;

/// Default log-det scale: 3 for up to 20 nodes, 8 beyond.
pub fn default_s(d: usize) -> f64 {
    if d <= 20 {
        3.0
    } else {
        8.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Task {
    Tp0,
    Tp1,
    Tn0,
    Tn1,
    Dag,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Tp0, Task::Tp1, Task::Tn0, Task::Tn1, Task::Dag];

    pub fn name(self) -> &'static str {
        match self {
            Task::Tp0 => "tp0",
            Task::Tp1 => "tp1",
            Task::Tn0 => "tn0",
            Task::Tn1 => "tn1",
            Task::Dag => "dag",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossConfig {
    pub alpha: Temperature,
    pub s: f64,
    /// Multipliers in [`Task::ALL`] order.
    pub weights: [f64; 5],
    /// Divide each CI loss by its number of queries.
    pub normalize: bool,
    pub max_path_len: Option<usize>,
}

impl LossConfig {
    pub fn new(d: usize) -> Self {
        LossConfig {
            alpha: Temperature::new(DEFAULT_ALPHA_TRAIN).expect("valid default"),
            s: default_s(d),
            weights: [1.0; 5],
            normalize: true,
            max_path_len: Some(DEFAULT_MAX_PATH_LEN),
        }
    }

    /// The losses exactly as summed over all queries with full-length paths.
    pub fn unnormalized(d: usize) -> Self {
        LossConfig { normalize: false, max_path_len: None, ..LossConfig::new(d) }
    }
}

/// Loss values and their gradients with respect to `theta`, in
/// [`Task::ALL`] order. `dag` is `+inf` (with a zero gradient) outside the
/// log-det domain.
#[derive(Clone, Debug, PartialEq)]
pub struct LossVector {
    pub values: [f64; 5],
    pub grads: [Array2<f64>; 5],
}

impl LossVector {
    pub fn get(&self, t: Task) -> f64 {
        self.values[t as usize]
    }

    pub fn grad(&self, t: Task) -> &Array2<f64> {
        &self.grads[t as usize]
    }

    pub fn dag_in_domain(&self) -> bool {
        self.get(Task::Dag).is_finite()
    }
}

/// Sum of the five losses; `+inf` when the acyclicity term is out of domain.
pub fn energy(losses: &LossVector) -> f64 {
    if !losses.dag_in_domain() {
        return f64::INFINITY;
    }
    losses.values.iter().sum()
}

/// `-ln det(sI - W) + d ln s` on plain values, or `None` outside the domain.
pub fn dag_loss(w: &Array2<f64>, s: f64) -> Option<f64> {
    let d = w.nrows();
    let m: Vec<f64> = (0..d * d)
        .map(|k| {
            let (i, j) = (k / d, k % d);
            if i == j {
                s
            } else {
                -w[[i, j]]
            }
        })
        .collect();
    lu_log_det(&m, d, false).map(|(ld, _)| -ld + d as f64 * s.ln())
}

/// Evaluates the losses for one table, reusing its tape between calls.
#[derive(Debug)]
pub struct Objective<'a> {
    table: &'a CiTable,
    cfg: LossConfig,
    tape: GradientTape,
}

impl<'a> Objective<'a> {
    pub fn new(table: &'a CiTable, cfg: LossConfig) -> Result<Self> {
        if !(cfg.s > 0.0) {
            return Err(Error::Config(format!("log-det scale s = {} must be positive", cfg.s)));
        }
        Ok(Objective { table, cfg, tape: GradientTape::new() })
    }

    pub fn config(&self) -> &LossConfig {
        &self.cfg
    }

    pub fn table(&self) -> &CiTable {
        self.table
    }

    pub fn evaluate(&mut self, theta: &Array2<f64>) -> Result<LossVector> {
        let d = self.table.n_vars();
        if theta.dim() != (d, d) {
            return Err(Error::domain(format!("theta is {:?}, table has {d} variables", theta.dim())));
        }
        if let Some(v) = theta.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("theta holds non-finite value {v}")));
        }
        let t = &mut self.tape;
        t.clear();
        let inputs: Vec<Var> = theta.iter().map(|&v| t.input(v)).collect();

        let (zero, one) = (t.constant(NEG_INF), t.constant(0.0));
        let mut w = vec![zero; d * d];
        let mut log_w = vec![zero; d * d];
        let mut log_not_w = vec![one; d * d];
        for i in 0..d {
            for j in (0..d).filter(|&j| j != i) {
                let k = i * d + j;
                let s = t.sigmoid(inputs[k]);
                let wk = t.clamp(s, PROB_EPS, 1.0 - PROB_EPS);
                w[k] = wk;
                log_w[k] = t.log(wk);
                let neg = t.scale(wk, -1.0);
                let not_w = t.offset(neg, 1.0);
                log_not_w[k] = t.log(not_w);
            }
        }
        let lw = LogWeights::new(d, log_w, log_not_w);
        let raw = build_scores(t, &lw, self.cfg.alpha.value(), self.cfg.max_path_len, Families::ALL);

        let table = self.table;
        let normalize = self.cfg.normalize;
        let weighted = |t: &mut GradientTape, terms: Vec<(Var, f64)>| {
            let k = if normalize && !terms.is_empty() { terms.len() as f64 } else { 1.0 };
            let scaled: Vec<Var> = terms.into_iter().map(|(v, c)| t.scale(v, -c / k)).collect();
            if scaled.is_empty() {
                t.constant(0.0)
            } else {
                t.sum(&scaled)
            }
        };
        let mut o0 = Vec::new();
        let mut o1 = Vec::new();
        for x in 0..d {
            for y in 0..x {
                o0.push((x, y));
                for z in (0..d).filter(|&z| z != x && z != y) {
                    o1.push((x, y, z));
                }
            }
        }
        let i1 = |x: usize, y: usize, z: usize| (x * d + y) * d + z;
        let tp0 = weighted(t, o0.iter().map(|&(x, y)| (raw.dsep0[x * d + y], table.p0(x, y))).collect());
        let tp1 = weighted(t, o1.iter().map(|&(x, y, z)| (raw.dsep1[i1(x, y, z)], table.p1(x, y, z))).collect());
        let tn0 = weighted(t, o0.iter().map(|&(x, y)| (raw.dcon0[x * d + y], table.m0() - table.p0(x, y))).collect());
        let tn1 =
            weighted(t, o1.iter().map(|&(x, y, z)| (raw.dcon1[i1(x, y, z)], table.m1() - table.p1(x, y, z))).collect());

        let s = self.cfg.s;
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                entries.push(if i == j { t.constant(s) } else { t.scale(w[i * d + j], -1.0) });
            }
        }
        let dag = match t.log_det(&entries, d) {
            Ok(ld) => {
                let neg = t.scale(ld, -1.0);
                Some(t.offset(neg, d as f64 * s.ln()))
            }
            Err(_) => None,
        };

        let outs = [Some(tp0), Some(tp1), Some(tn0), Some(tn1), dag];
        let mut values = [0.0; 5];
        let grads: [Array2<f64>; 5] = std::array::from_fn(|k| {
            let wk = self.cfg.weights[k];
            match outs[k] {
                Some(v) => {
                    values[k] = wk * self.tape.value(v);
                    let g = self.tape.gradient(v);
                    Array2::from_shape_vec((d, d), g.into_iter().map(|x| wk * x).collect()).expect("d x d")
                }
                None => {
                    values[k] = f64::INFINITY;
                    Array2::zeros((d, d))
                }
            }
        });
        Ok(LossVector { values, grads })
    }
}

/// One-shot [`Objective::evaluate`].
pub fn loss_suite(theta: &Array2<f64>, table: &CiTable, cfg: &LossConfig) -> Result<LossVector> {
    Objective::new(table, *cfg)?.evaluate(theta)
}
