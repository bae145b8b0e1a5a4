//! Reverse-mode differentiation over a fixed set of scalar operations.
//!
//! The tape is a Wengert list: every node stores its operation, its operand
//! indices and the local partial derivatives computed during the forward
//! evaluation. A reverse pass is then one sweep of multiply-adds from the
//! output back to the inputs.
//!
//! Operands that are structurally `log 0` (the [`NEG_INF`] sentinel) are
//! pruned while recording: a saturated conjunction collapses to a shared
//! constant node, and a log-mean-exp keeps only its live operands. The
//! derivative through a saturated branch is therefore exactly zero, and a
//! replay reproduces the recorded values bit for bit given the same inputs.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::logic::{ln_sat, log_mean_exp_raw, saturate, tnorm_raw, NEG_INF};

/// Handle to a node on a [`GradientTape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Input,
    Const,
    Sum,
    /// Saturating sum of log-probabilities (the log-space t-norm).
    LogAnd,
    Scale(f64),
    Offset(f64),
    Log,
    Exp,
    LogMeanExp {
        alpha: f64,
        m: u32,
    },
    Sigmoid,
    Clamp {
        lo: f64,
        hi: f64,
    },
    LogDet {
        dim: u32,
    },
}

#[derive(Clone, Debug, Default)]
pub struct GradientTape {
    values: Vec<f64>,
    ops: Vec<Op>,
    arg_start: Vec<u32>,
    args: Vec<u32>,
    partials: Vec<f64>,
    inputs: Vec<u32>,
    neg_inf: Option<Var>,
    scratch: Vec<f64>,
}

impl GradientTape {
    pub fn new() -> Self {
        GradientTape { arg_start: vec![0], ..Default::default() }
    }

    /// Drops every node but keeps the allocations.
    pub fn clear(&mut self) {
        self.values.clear();
        self.ops.clear();
        self.arg_start.clear();
        self.arg_start.push(0);
        self.args.clear();
        self.partials.clear();
        self.inputs.clear();
        self.neg_inf = None;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    #[inline]
    pub fn value(&self, v: Var) -> f64 {
        self.values[v.index()]
    }

    fn push(&mut self, op: Op, value: f64, args: &[u32], partials: &[f64]) -> Var {
        debug_assert_eq!(args.len(), partials.len());
        let id = self.values.len() as u32;
        self.values.push(value);
        self.ops.push(op);
        self.args.extend_from_slice(args);
        self.partials.extend_from_slice(partials);
        self.arg_start.push(self.args.len() as u32);
        Var(id)
    }

    pub fn input(&mut self, value: f64) -> Var {
        let v = self.push(Op::Input, value, &[], &[]);
        self.inputs.push(v.0);
        v
    }

    pub fn constant(&mut self, value: f64) -> Var {
        if value == NEG_INF {
            if let Some(v) = self.neg_inf {
                return v;
            }
            let v = self.push(Op::Const, NEG_INF, &[], &[]);
            self.neg_inf = Some(v);
            return v;
        }
        self.push(Op::Const, value, &[], &[])
    }

    pub fn sum(&mut self, xs: &[Var]) -> Var {
        let args: Vec<u32> = xs.iter().map(|v| v.0).collect();
        let value = self.eval(Op::Sum, &args);
        self.push(Op::Sum, value, &args, &vec![1.0; args.len()])
    }

    /// Log-space conjunction: saturating sum of log-probabilities.
    pub fn log_and(&mut self, xs: &[Var]) -> Var {
        // Same accumulation order as `tnorm_raw`, so replays match bitwise.
        let mut acc = 0.0;
        for &v in xs {
            let x = self.values[v.index()];
            if x <= NEG_INF {
                return self.constant(NEG_INF);
            }
            acc += x;
        }
        if acc <= NEG_INF {
            return self.constant(NEG_INF);
        }
        for &v in xs {
            self.args.push(v.0);
            self.partials.push(1.0);
        }
        self.finish(Op::LogAnd, acc)
    }

    /// Log-space disjunction: log-mean-exp at temperature `alpha` over all
    /// `xs`. Saturated operands are dropped but still counted in the mean.
    pub fn log_mean_exp(&mut self, xs: &[Var], alpha: f64) -> Var {
        let mut live = std::mem::take(&mut self.scratch);
        live.clear();
        let start = self.args.len();
        for &v in xs {
            let x = self.values[v.index()];
            if x > NEG_INF {
                live.push(x);
                self.args.push(v.0);
            }
        }
        if live.is_empty() {
            self.scratch = live;
            return self.constant(NEG_INF);
        }
        self.partials.resize(start + live.len(), 0.0);
        let value = log_mean_exp_raw(&live, xs.len(), alpha, Some(&mut self.partials[start..]));
        self.scratch = live;
        if value <= NEG_INF {
            self.args.truncate(start);
            self.partials.truncate(start);
            return self.constant(NEG_INF);
        }
        let op = Op::LogMeanExp { alpha, m: xs.len() as u32 };
        self.finish(op, value)
    }

    /// Records a node whose operands and partials were already appended.
    fn finish(&mut self, op: Op, value: f64) -> Var {
        let id = self.values.len() as u32;
        self.values.push(value);
        self.ops.push(op);
        self.arg_start.push(self.args.len() as u32);
        Var(id)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let value = self.eval(Op::Scale(c), &[x.0]);
        self.push(Op::Scale(c), value, &[x.0], &[c])
    }

    pub fn offset(&mut self, x: Var, c: f64) -> Var {
        let value = self.eval(Op::Offset(c), &[x.0]);
        self.push(Op::Offset(c), value, &[x.0], &[1.0])
    }

    /// Natural log, with `ln 0` mapped to the sentinel.
    pub fn log(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        if xv <= 0.0 {
            return self.constant(NEG_INF);
        }
        let value = self.eval(Op::Log, &[x.0]);
        self.push(Op::Log, value, &[x.0], &[1.0 / xv])
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let value = self.eval(Op::Exp, &[x.0]);
        self.push(Op::Exp, value, &[x.0], &[value])
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let value = self.eval(Op::Sigmoid, &[x.0]);
        self.push(Op::Sigmoid, value, &[x.0], &[value * (1.0 - value)])
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        let xv = self.value(x);
        let op = Op::Clamp { lo, hi };
        let value = self.eval(op, &[x.0]);
        let d = if (lo..=hi).contains(&xv) { 1.0 } else { 0.0 };
        self.push(op, value, &[x.0], &[d])
    }

    /// `ln det M` for a row-major `dim x dim` matrix of nodes.
    ///
    /// Only defined when Gaussian elimination without pivoting meets strictly
    /// positive pivots; for `M = sI - W` with `W >= 0` that is exactly the
    /// nonsingular M-matrix domain `s > rho(W)`.
    pub fn log_det(&mut self, entries: &[Var], dim: usize) -> Result<Var> {
        if entries.len() != dim * dim {
            return Err(Error::domain(format!("log_det needs {} entries, got {}", dim * dim, entries.len())));
        }
        let m: Vec<f64> = entries.iter().map(|&v| self.value(v)).collect();
        let (value, inv) =
            lu_log_det(&m, dim, true).ok_or_else(|| Error::domain("log_det outside the positive-pivot domain"))?;
        let inv = inv.expect("inverse requested");
        // d ln det M / d M_ij = (M^-1)_ji
        let partials: Vec<f64> = (0..dim * dim).map(|k| inv[(k % dim) * dim + k / dim]).collect();
        let args: Vec<u32> = entries.iter().map(|v| v.0).collect();
        Ok(self.push(Op::LogDet { dim: dim as u32 }, value, &args, &partials))
    }

    fn eval(&mut self, op: Op, args: &[u32]) -> f64 {
        let mut xs = std::mem::take(&mut self.scratch);
        xs.clear();
        xs.extend(args.iter().map(|&a| self.values[a as usize]));
        let out = eval_op(op, &xs);
        self.scratch = xs;
        out
    }

    /// Gradient of `output` with respect to every input, in input order.
    pub fn gradient(&self, output: Var) -> Vec<f64> {
        let mut adj = vec![0.0; output.index() + 1];
        adj[output.index()] = 1.0;
        for i in (0..=output.index()).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let (s, e) = (self.arg_start[i] as usize, self.arg_start[i + 1] as usize);
            for k in s..e {
                adj[self.args[k] as usize] += a * self.partials[k];
            }
        }
        self.inputs.iter().map(|&v| adj.get(v as usize).copied().unwrap_or(0.0)).collect()
    }

    /// Re-evaluates every node from new input values, reusing the recorded
    /// structure (including the structural-zero pruning done at record time).
    pub fn replay(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::domain(format!("replay needs {} inputs, got {}", self.inputs.len(), inputs.len())));
        }
        let mut values = Vec::with_capacity(self.values.len());
        let mut next_input = 0;
        let mut xs = Vec::new();
        for (i, &op) in self.ops.iter().enumerate() {
            let v = match op {
                Op::Input => {
                    next_input += 1;
                    inputs[next_input - 1]
                }
                Op::Const => self.values[i],
                _ => {
                    xs.clear();
                    let (s, e) = (self.arg_start[i] as usize, self.arg_start[i + 1] as usize);
                    xs.extend(self.args[s..e].iter().map(|&a| values[a as usize]));
                    eval_op(op, &xs)
                }
            };
            values.push(v);
        }
        Ok(values)
    }

    /// Value of every node as recorded.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn eval_op(op: Op, xs: &[f64]) -> f64 {
    match op {
        Op::Input | Op::Const => unreachable!("leaf nodes carry their own value"),
        Op::Sum => xs.iter().sum(),
        Op::LogAnd => tnorm_raw(xs),
        Op::Scale(c) => xs[0] * c,
        Op::Offset(c) => xs[0] + c,
        Op::Log => ln_sat(xs[0]),
        Op::Exp => xs[0].exp(),
        Op::LogMeanExp { alpha, m } => log_mean_exp_raw(xs, m as usize, alpha, None),
        Op::Sigmoid => 1.0 / (1.0 + (-xs[0]).exp()),
        Op::Clamp { lo, hi } => xs[0].clamp(lo, hi),
        Op::LogDet { dim } => lu_log_det(xs, dim as usize, false).map(|(v, _)| v).unwrap_or(f64::NAN),
    }
}

/// `ln det` via LU without pivoting; `None` unless every pivot is positive.
/// Optionally also returns the inverse (row-major).
pub(crate) fn lu_log_det(m: &[f64], dim: usize, want_inverse: bool) -> Option<(f64, Option<Vec<f64>>)> {
    let mut lu = m.to_vec();
    let mut log_det = 0.0;
    for k in 0..dim {
        let p = lu[k * dim + k];
        if !(p > 0.0) || !p.is_finite() {
            return None;
        }
        log_det += p.ln();
        for i in k + 1..dim {
            let f = lu[i * dim + k] / p;
            lu[i * dim + k] = f;
            for j in k + 1..dim {
                lu[i * dim + j] -= f * lu[k * dim + j];
            }
        }
    }
    let inverse = want_inverse.then(|| {
        let mut inv = vec![0.0; dim * dim];
        let mut col = vec![0.0; dim];
        for c in 0..dim {
            for (i, v) in col.iter_mut().enumerate() {
                *v = if i == c { 1.0 } else { 0.0 };
            }
            for i in 0..dim {
                for j in 0..i {
                    col[i] -= lu[i * dim + j] * col[j];
                }
            }
            for i in (0..dim).rev() {
                for j in i + 1..dim {
                    col[i] -= lu[i * dim + j] * col[j];
                }
                col[i] /= lu[i * dim + i];
            }
            for i in 0..dim {
                inv[i * dim + c] = col[i];
            }
        }
        inv
    });
    Some((saturate_finite(log_det), inverse))
}

fn saturate_finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        saturate(x)
    }
}

/// Evaluates `f` on a tape whose inputs are the entries of `theta`
/// (row-major) and returns the value with its gradient.
///
/// The operation set is closed: `f` can only combine inputs through the
/// tape's methods, so every node is differentiable by construction.
pub fn value_and_grad<F>(theta: &Array2<f64>, f: F) -> Result<(f64, Array2<f64>)>
where
    F: FnOnce(&mut GradientTape, &[Var]) -> Result<Var>,
{
    let mut tape = GradientTape::new();
    let vars: Vec<Var> = theta.iter().map(|&t| tape.input(t)).collect();
    let out = f(&mut tape, &vars)?;
    let grad = tape.gradient(out);
    let grad = Array2::from_shape_vec(theta.raw_dim(), grad).expect("one partial per input");
    Ok((tape.value(out), grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sigmoid_sum_gradient() {
        let theta = Array2::from_shape_fn((3, 3), |(i, j)| i as f64 - 0.7 * j as f64);
        let (v, g) = value_and_grad(&theta, |t, xs| {
            let s: Vec<Var> = xs.iter().map(|&x| t.sigmoid(x)).collect();
            Ok(t.sum(&s))
        })
        .unwrap();
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        assert_relative_eq!(v, theta.iter().map(|&x| sig(x)).sum::<f64>(), max_relative = 1e-14);
        for (gi, &x) in g.iter().zip(theta.iter()) {
            assert_relative_eq!(*gi, sig(x) * (1.0 - sig(x)), max_relative = 1e-12);
        }
    }

    #[test]
    fn saturated_branches_have_zero_gradient() {
        let theta = Array2::from_shape_vec((1, 2), vec![-0.5, -1.0]).unwrap();
        let (_, g) = value_and_grad(&theta, |t, xs| {
            let dead = t.constant(NEG_INF);
            let a = t.log_and(&[xs[0], dead]);
            Ok(t.log_mean_exp(&[a, xs[1]], 0.5))
        })
        .unwrap();
        assert_eq!(g[[0, 0]], 0.0);
        assert_relative_eq!(g[[0, 1]], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn log_det_gradient_is_inverse_transpose() {
        let m = [3.0, -0.2, -0.7, 3.0];
        let mut t = GradientTape::new();
        let vars: Vec<Var> = m.iter().map(|&x| t.input(x)).collect();
        let out = t.log_det(&vars, 2).unwrap();
        let det: f64 = 9.0 - 0.14;
        assert_relative_eq!(t.value(out), det.ln(), max_relative = 1e-14);
        let g = t.gradient(out);
        // (M^-1)^T = [[d, -c], [-b, a]] / det
        let expect = [3.0 / det, 0.7 / det, 0.2 / det, 3.0 / det];
        for (a, b) in g.iter().zip(expect) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn log_det_outside_domain_fails() {
        let mut t = GradientTape::new();
        let vars: Vec<Var> = [1.0, -2.0, -2.0, 1.0].iter().map(|&x| t.input(x)).collect();
        assert!(t.log_det(&vars, 2).is_err());
    }

    #[test]
    fn replay_is_bit_identical() {
        let inputs = [0.3, -1.2, 2.5];
        let mut t = GradientTape::new();
        let v: Vec<Var> = inputs.iter().map(|&x| t.input(x)).collect();
        let s: Vec<Var> = v.iter().map(|&x| t.sigmoid(x)).collect();
        let l: Vec<Var> = s.iter().map(|&x| t.log(x)).collect();
        let a = t.log_and(&[l[0], l[1]]);
        let o = t.log_mean_exp(&[a, l[2], l[1]], 0.01);
        let e = t.exp(o);
        let c = t.clamp(e, 0.1, 0.9);
        let sc = t.scale(c, -3.0);
        let off = t.offset(sc, 3.0);
        let _ = t.sum(&[off, a, o]);
        let replayed = t.replay(&inputs).unwrap();
        assert_eq!(replayed.len(), t.len());
        for (a, b) in replayed.iter().zip(t.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
