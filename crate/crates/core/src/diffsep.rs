//! Soft reachability, unreachability and low-order d-separation scores.
//!
//! Every score is a log-probability that lower-bounds the probability of the
//! corresponding discrete statement when each edge `u -> v` is present
//! independently with probability `W[u, v]`.
//!
//! The recursions are written once against [`LogicOps`] and evaluated either
//! directly on `f64` ([`ExactLogic`]) or on a [`GradientTape`] when gradients
//! are needed.
//!
//! Order-1 scores mix two graphs: the `x`-`y` and `x`-`a` separation terms
//! are computed on the graph with `z` deleted, while the ancestor terms
//! `U(a, z)` / `R(a, z)` use the full graph. The deleted graph has its own
//! labels; [`NodeMap`](crate::graph::NodeMap)-style index translation maps
//! them back so every stored score is addressed by original labels.

use ndarray::{Array2, Array3};

use crate::graph::WeightMatrix;
use crate::logic::{ln_sat, log_mean_exp_raw, tnorm_raw, LogProb, Temperature, NEG_INF};
use crate::tape::{GradientTape, Var};

/// The two log-space connectives, over some value representation.
pub trait LogicOps {
    type Val: Copy;

    fn constant(&mut self, v: f64) -> Self::Val;
    fn value(&self, v: Self::Val) -> f64;
    /// Product t-norm (saturating sum).
    fn and(&mut self, xs: &[Self::Val]) -> Self::Val;
    /// Log-mean-exp t-conorm with `m = xs.len()`.
    fn or(&mut self, xs: &[Self::Val], alpha: f64) -> Self::Val;
}

/// Plain floating-point evaluation.
#[derive(Clone, Debug, Default)]
pub struct ExactLogic {
    live: Vec<f64>,
}

impl LogicOps for ExactLogic {
    type Val = f64;

    fn constant(&mut self, v: f64) -> f64 {
        v
    }

    fn value(&self, v: f64) -> f64 {
        v
    }

    fn and(&mut self, xs: &[f64]) -> f64 {
        tnorm_raw(xs)
    }

    fn or(&mut self, xs: &[f64], alpha: f64) -> f64 {
        self.live.clear();
        self.live.extend(xs.iter().copied().filter(|&x| x > NEG_INF));
        log_mean_exp_raw(&self.live, xs.len(), alpha, None)
    }
}

impl LogicOps for GradientTape {
    type Val = Var;

    fn constant(&mut self, v: f64) -> Var {
        GradientTape::constant(self, v)
    }

    fn value(&self, v: Var) -> f64 {
        GradientTape::value(self, v)
    }

    fn and(&mut self, xs: &[Var]) -> Var {
        self.log_and(xs)
    }

    fn or(&mut self, xs: &[Var], alpha: f64) -> Var {
        self.log_mean_exp(xs, alpha)
    }
}

/// `ln W` and `ln(1 - W)` for every ordered pair, row-major.
#[derive(Clone, Debug)]
pub struct LogWeights<V> {
    n: usize,
    log_w: Vec<V>,
    log_not_w: Vec<V>,
}

impl<V: Copy> LogWeights<V> {
    pub fn new(n: usize, log_w: Vec<V>, log_not_w: Vec<V>) -> Self {
        assert_eq!(log_w.len(), n * n);
        assert_eq!(log_not_w.len(), n * n);
        LogWeights { n, log_w, log_not_w }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    /// The same handles with node `z`'s row and column dropped.
    pub fn without(&self, z: usize) -> LogWeights<V> {
        let m = self.n - 1;
        let mut log_w = Vec::with_capacity(m * m);
        let mut log_not_w = Vec::with_capacity(m * m);
        for i in (0..self.n).filter(|&i| i != z) {
            for j in (0..self.n).filter(|&j| j != z) {
                log_w.push(self.log_w[i * self.n + j]);
                log_not_w.push(self.log_not_w[i * self.n + j]);
            }
        }
        LogWeights { n: m, log_w, log_not_w }
    }
}

impl LogWeights<f64> {
    pub fn from_matrix(w: &WeightMatrix) -> Self {
        let log_w = w.as_slice().iter().map(|&p| ln_sat(p)).collect();
        let log_not_w = w.as_slice().iter().map(|&p| ln_sat(1.0 - p)).collect();
        LogWeights::new(w.n_nodes(), log_w, log_not_w)
    }
}

/// Recursion horizon used for an `n`-node matrix.
pub fn horizon(n: usize, max_path_len: Option<usize>) -> usize {
    max_path_len.map_or(n, |l| l.min(n))
}

/// Soft reachability `R~(l)`, row-major `n x n`.
pub fn reach_rec<B: LogicOps>(b: &mut B, lw: &LogWeights<B::Val>, l: usize, alpha: f64) -> Vec<B::Val> {
    let n = lw.n;
    let (one, zero) = (b.constant(0.0), b.constant(NEG_INF));
    let mut r: Vec<B::Val> = (0..n * n).map(|k| if k / n == k % n { one } else { zero }).collect();
    let mut next = r.clone();
    let mut terms = Vec::with_capacity(n + 1);
    let mut pair = [zero; 2];
    for _ in 0..l {
        for x in 0..n {
            for y in 0..n {
                terms.clear();
                for u in 0..n {
                    pair[0] = r[x * n + u];
                    pair[1] = lw.log_w[u * n + y];
                    terms.push(b.and(&pair));
                }
                terms.push(r[x * n + y]);
                next[x * n + y] = b.or(&terms, alpha);
            }
        }
        std::mem::swap(&mut r, &mut next);
    }
    r
}

/// Soft unreachability `U~(l)`, row-major `n x n`. Computed by its own dual
/// recursion rather than as `ln(1 - exp R~)`.
pub fn unreach_rec<B: LogicOps>(b: &mut B, lw: &LogWeights<B::Val>, l: usize, alpha: f64) -> Vec<B::Val> {
    let n = lw.n;
    let (one, zero) = (b.constant(0.0), b.constant(NEG_INF));
    let mut u: Vec<B::Val> = (0..n * n).map(|k| if k / n == k % n { zero } else { one }).collect();
    let mut next = u.clone();
    let mut terms = Vec::with_capacity(n + 1);
    let mut pair = [zero; 2];
    for _ in 0..l {
        for x in 0..n {
            for y in 0..n {
                terms.clear();
                for v in 0..n {
                    pair[0] = u[x * n + v];
                    pair[1] = lw.log_not_w[v * n + y];
                    terms.push(b.or(&pair, alpha));
                }
                terms.push(u[x * n + y]);
                next[x * n + y] = b.and(&terms);
            }
        }
        std::mem::swap(&mut u, &mut next);
    }
    u
}

/// Order-0 separation from unreachability: no node reaches both ends.
fn sep0_table<B: LogicOps>(b: &mut B, n: usize, unreach: &[B::Val], alpha: f64) -> Vec<B::Val> {
    let zero = b.constant(NEG_INF);
    let mut out = vec![zero; n * n];
    let mut terms = Vec::with_capacity(n);
    for x in 0..n {
        for y in 0..x {
            terms.clear();
            for a in 0..n {
                let pair = [unreach[a * n + x], unreach[a * n + y]];
                terms.push(b.or(&pair, alpha));
            }
            let s = b.and(&terms);
            out[x * n + y] = s;
            out[y * n + x] = s;
        }
    }
    out
}

/// Order-0 connection from reachability: some node reaches both ends.
/// The diagonal is filled too (every node is its own common ancestor).
fn con0_table<B: LogicOps>(b: &mut B, n: usize, reach: &[B::Val], alpha: f64) -> Vec<B::Val> {
    let zero = b.constant(NEG_INF);
    let mut out = vec![zero; n * n];
    let mut terms = Vec::with_capacity(n);
    for x in 0..n {
        for y in 0..=x {
            terms.clear();
            for a in 0..n {
                let pair = [reach[a * n + x], reach[a * n + y]];
                terms.push(b.and(&pair));
            }
            let c = b.or(&terms, alpha);
            out[x * n + y] = c;
            out[y * n + x] = c;
        }
    }
    out
}

/// Which score families to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Families {
    pub separation: bool,
    pub connection: bool,
}

impl Families {
    pub const ALL: Families = Families { separation: true, connection: true };
    pub const SEPARATION: Families = Families { separation: true, connection: false };
}

/// Score handles indexed by original labels. Order-0 tables are `n x n`,
/// order-1 tables `n x n x n` at `(x * n + y) * n + z`. Slots of degenerate
/// queries, and of families not requested, hold the `NEG_INF` constant.
#[derive(Clone, Debug)]
pub struct RawScores<V> {
    pub n: usize,
    pub dsep0: Vec<V>,
    pub dcon0: Vec<V>,
    pub dsep1: Vec<V>,
    pub dcon1: Vec<V>,
}

/// Builds the requested score families for the graph described by `lw`.
pub fn build_scores<B: LogicOps>(
    b: &mut B,
    lw: &LogWeights<B::Val>,
    alpha: f64,
    max_path_len: Option<usize>,
    families: Families,
) -> RawScores<B::Val> {
    let n = lw.n;
    let zero = b.constant(NEG_INF);
    let l = horizon(n, max_path_len);
    let mut out = RawScores {
        n,
        dsep0: vec![zero; n * n],
        dcon0: vec![zero; n * n],
        dsep1: vec![zero; n * n * n],
        dcon1: vec![zero; n * n * n],
    };
    let unreach = families.separation.then(|| unreach_rec(b, lw, l, alpha));
    let reach = families.connection.then(|| reach_rec(b, lw, l, alpha));
    if let Some(u) = &unreach {
        out.dsep0 = sep0_table(b, n, u, alpha);
    }
    if let Some(r) = &reach {
        out.dcon0 = con0_table(b, n, r, alpha);
        for x in 0..n {
            out.dcon0[x * n + x] = zero;
        }
    }
    if n < 3 {
        return out;
    }

    let ls = horizon(n - 1, max_path_len);
    let mut terms = Vec::with_capacity(n);
    let mut side_s = vec![zero; n];
    let mut side_c = vec![zero; n];
    for z in 0..n {
        let sub = lw.without(z);
        let m = n - 1;
        let to_sub = |v: usize| if v < z { v } else { v - 1 };
        let sub_sep = unreach.as_ref().map(|_| {
            let su = unreach_rec(b, &sub, ls, alpha);
            sep0_table(b, m, &su, alpha)
        });
        let sub_con = reach.as_ref().map(|_| {
            let sr = reach_rec(b, &sub, ls, alpha);
            con0_table(b, m, &sr, alpha)
        });

        // Per-node halves of the order-1 formula, shared by every partner y.
        for x in (0..n).filter(|&x| x != z) {
            let xs = to_sub(x);
            if let (Some(ss), Some(u)) = (&sub_sep, &unreach) {
                terms.clear();
                for a in (0..n).filter(|&a| a != z) {
                    let pair = [ss[xs * m + to_sub(a)], u[a * n + z]];
                    terms.push(b.or(&pair, alpha));
                }
                side_s[x] = b.and(&terms);
            }
            if let (Some(sc), Some(r)) = (&sub_con, &reach) {
                terms.clear();
                for a in (0..n).filter(|&a| a != z) {
                    let pair = [sc[xs * m + to_sub(a)], r[a * n + z]];
                    terms.push(b.and(&pair));
                }
                side_c[x] = b.or(&terms, alpha);
            }
        }

        for x in (0..n).filter(|&x| x != z) {
            for y in (0..x).filter(|&y| y != z) {
                let (xs, ys) = (to_sub(x), to_sub(y));
                if let Some(ss) = &sub_sep {
                    let either = b.or(&[side_s[x], side_s[y]], alpha);
                    let s = b.and(&[ss[xs * m + ys], either]);
                    out.dsep1[(x * n + y) * n + z] = s;
                    out.dsep1[(y * n + x) * n + z] = s;
                }
                if let Some(sc) = &sub_con {
                    let both = b.and(&[side_c[x], side_c[y]]);
                    let c = b.or(&[sc[xs * m + ys], both], alpha);
                    out.dcon1[(x * n + y) * n + z] = c;
                    out.dcon1[(y * n + x) * n + z] = c;
                }
            }
        }
    }
    out
}

/// Options for [`soft_scores_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreConfig {
    pub alpha: Temperature,
    /// Caps the reachability horizon at `min(n, max_path_len)`.
    pub max_path_len: Option<usize>,
}

impl ScoreConfig {
    pub fn new(alpha: Temperature) -> Self {
        ScoreConfig { alpha, max_path_len: None }
    }
}

/// All four score families for one weight matrix.
#[derive(Clone, Debug)]
pub struct SoftScoreSet {
    n: usize,
    alpha: Temperature,
    dsep0: Array2<f64>,
    dcon0: Array2<f64>,
    dsep1: Array3<f64>,
    dcon1: Array3<f64>,
}

impl SoftScoreSet {
    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> Temperature {
        self.alpha
    }

    fn pair_ok(&self, x: usize, y: usize) -> bool {
        x != y && x < self.n && y < self.n
    }

    fn triple_ok(&self, x: usize, y: usize, z: usize) -> bool {
        self.pair_ok(x, y) && z < self.n && z != x && z != y
    }

    /// `None` for degenerate queries.
    pub fn dsep0(&self, x: usize, y: usize) -> Option<LogProb> {
        self.pair_ok(x, y).then(|| wrap(self.dsep0[[x, y]]))
    }

    pub fn dcon0(&self, x: usize, y: usize) -> Option<LogProb> {
        self.pair_ok(x, y).then(|| wrap(self.dcon0[[x, y]]))
    }

    pub fn dsep1(&self, x: usize, y: usize, z: usize) -> Option<LogProb> {
        self.triple_ok(x, y, z).then(|| wrap(self.dsep1[[x, y, z]]))
    }

    pub fn dcon1(&self, x: usize, y: usize, z: usize) -> Option<LogProb> {
        self.triple_ok(x, y, z).then(|| wrap(self.dcon1[[x, y, z]]))
    }
}

fn wrap(v: f64) -> LogProb {
    LogProb::new(v).expect("scores are log-probabilities")
}

pub fn soft_scores(w: &WeightMatrix, alpha: Temperature) -> SoftScoreSet {
    soft_scores_with(w, &ScoreConfig::new(alpha))
}

pub fn soft_scores_with(w: &WeightMatrix, cfg: &ScoreConfig) -> SoftScoreSet {
    let n = w.n_nodes();
    let lw = LogWeights::from_matrix(w);
    let raw = build_scores(&mut ExactLogic::default(), &lw, cfg.alpha.value(), cfg.max_path_len, Families::ALL);
    SoftScoreSet {
        n,
        alpha: cfg.alpha,
        dsep0: Array2::from_shape_vec((n, n), raw.dsep0).expect("n x n"),
        dcon0: Array2::from_shape_vec((n, n), raw.dcon0).expect("n x n"),
        dsep1: Array3::from_shape_vec((n, n, n), raw.dsep1).expect("n x n x n"),
        dcon1: Array3::from_shape_vec((n, n, n), raw.dcon1).expect("n x n x n"),
    }
}

/// Soft reachability `R~(l)` of `w`.
pub fn soft_reach(w: &WeightMatrix, l: usize, alpha: Temperature) -> Array2<LogProb> {
    let lw = LogWeights::from_matrix(w);
    let r = reach_rec(&mut ExactLogic::default(), &lw, l, alpha.value());
    Array2::from_shape_vec((w.n_nodes(), w.n_nodes()), r.into_iter().map(wrap).collect()).expect("n x n")
}

/// Soft unreachability `U~(l)` of `w`.
pub fn soft_unreach(w: &WeightMatrix, l: usize, alpha: Temperature) -> Array2<LogProb> {
    let lw = LogWeights::from_matrix(w);
    let u = unreach_rec(&mut ExactLogic::default(), &lw, l, alpha.value());
    Array2::from_shape_vec((w.n_nodes(), w.n_nodes()), u.into_iter().map(wrap).collect()).expect("n x n")
}

/// Thresholded order-0/1 separation statements (`exp(score) > 1/2`) of a
/// weight matrix, computing only the separation family.
pub struct SeparationStatements {
    n: usize,
    sep0: Vec<bool>,
    sep1: Vec<bool>,
}

impl SeparationStatements {
    pub fn new(w: &WeightMatrix, cfg: &ScoreConfig) -> Self {
        let n = w.n_nodes();
        let lw = LogWeights::from_matrix(w);
        let raw =
            build_scores(&mut ExactLogic::default(), &lw, cfg.alpha.value(), cfg.max_path_len, Families::SEPARATION);
        let half = 0.5f64.ln();
        SeparationStatements {
            n,
            sep0: raw.dsep0.iter().map(|&v| v > half).collect(),
            sep1: raw.dsep1.iter().map(|&v| v > half).collect(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    /// Caller guarantees `x != y`.
    pub fn sep0(&self, x: usize, y: usize) -> bool {
        self.sep0[x * self.n + y]
    }

    /// Caller guarantees `x, y, z` distinct.
    pub fn sep1(&self, x: usize, y: usize, z: usize) -> bool {
        self.sep1[(x * self.n + y) * self.n + z]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{BinaryDag, DiscreteSeparation};
    use approx::assert_abs_diff_eq;

    fn temp(a: f64) -> Temperature {
        Temperature::new(a).unwrap()
    }

    #[test]
    fn empty_graph_base_cases() {
        let w = WeightMatrix::from_probabilities(&Array2::zeros((3, 3))).unwrap();
        let r = soft_reach(&w, 3, temp(1e-5));
        let u = soft_unreach(&w, 3, temp(1e-5));
        for x in 0..3 {
            for y in 0..3 {
                if x == y {
                    assert_abs_diff_eq!(r[[x, y]].value(), 0.0, epsilon = 1e-4);
                    assert!(u[[x, y]].is_zero());
                } else {
                    assert!(r[[x, y]].value() < -20.0);
                    assert_abs_diff_eq!(u[[x, y]].value(), 0.0, epsilon = 1e-4);
                }
            }
        }
    }

    #[test]
    fn single_edge_unreach_is_exact() {
        let mut m = Array2::zeros((2, 2));
        m[[0, 1]] = 0.3;
        let w = WeightMatrix::from_probabilities(&m).unwrap();
        for a in [1.0, 0.1, 0.01] {
            let u = soft_unreach(&w, 1, temp(a));
            // The only live disjunction is or(ln 0, ln 0.7), which keeps the
            // saturated operand in its divisor: ln 0.7 - a ln 2.
            let expect = 0.7f64.ln() - a * 2f64.ln();
            assert_abs_diff_eq!(u[[0, 1]].value(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn chain_near_certain_edges() {
        let g = BinaryDag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let w = WeightMatrix::from_graph_clamped(g.graph());
        let r = soft_reach(&w, 2, temp(1e-5));
        assert_abs_diff_eq!(r[[0, 2]].value(), 0.0, epsilon = 1e-4);
        let s = soft_scores(&w, temp(1e-5));
        assert!(s.dsep1(0, 2, 1).unwrap().prob() > 0.99);
        assert!(s.dcon0(0, 2).unwrap().prob() > 0.99);
        assert!(s.dsep0(0, 0).is_none());
        assert!(s.dsep1(0, 2, 2).is_none());
    }

    #[test]
    fn binary_weights_recover_discrete_statements() {
        let g = BinaryDag::from_edges(5, &[(0, 2), (1, 2), (2, 3), (4, 1), (4, 3)]).unwrap();
        let sep = DiscreteSeparation::new(&g);
        let cfg = ScoreConfig::new(temp(1e-5));
        for w in [WeightMatrix::from_graph(g.graph()), WeightMatrix::from_graph_clamped(g.graph())] {
            let s = soft_scores_with(&w, &cfg);
            let st = SeparationStatements::new(&w, &cfg);
            for x in 0..5 {
                for y in (0..5).filter(|&y| y != x) {
                    assert_eq!(s.dsep0(x, y).unwrap().prob() > 0.5, sep.dsep0(x, y).unwrap());
                    assert_eq!(s.dcon0(x, y).unwrap().prob() > 0.5, sep.dcon0(x, y).unwrap());
                    assert_eq!(st.sep0(x, y), sep.dsep0(x, y).unwrap());
                    for z in (0..5).filter(|&z| z != x && z != y) {
                        assert_eq!(s.dsep1(x, y, z).unwrap().prob() > 0.5, sep.dsep1(x, y, z).unwrap());
                        assert_eq!(s.dcon1(x, y, z).unwrap().prob() > 0.5, sep.dcon1(x, y, z).unwrap());
                        assert_eq!(st.sep1(x, y, z), sep.dsep1(x, y, z).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn tape_and_exact_backends_agree() {
        let m = Array2::from_shape_fn((4, 4), |(i, j)| if i == j { 0.0 } else { 0.1 + 0.05 * (i * 4 + j) as f64 });
        let w = WeightMatrix::from_probabilities(&m).unwrap();
        let exact = soft_scores(&w, temp(0.05));
        let mut t = GradientTape::new();
        let lw_exact = LogWeights::from_matrix(&w);
        let log_w = lw_exact.log_w.iter().map(|&v| t.input(v)).collect();
        let log_not_w = lw_exact.log_not_w.iter().map(|&v| t.input(v)).collect();
        let lw = LogWeights::new(4, log_w, log_not_w);
        let raw = build_scores(&mut t, &lw, 0.05, None, Families::ALL);
        for (x, y, z) in [(1, 0, 2), (3, 1, 0), (2, 0, 3)] {
            assert_eq!(t.value(raw.dsep1[(x * 4 + y) * 4 + z]), exact.dsep1(x, y, z).unwrap().value());
            assert_eq!(t.value(raw.dcon1[(x * 4 + y) * 4 + z]), exact.dcon1(x, y, z).unwrap().value());
            assert_eq!(t.value(raw.dsep0[x * 4 + y]), exact.dsep0(x, y).unwrap().value());
        }
    }
}
