//! Scoring sampled DAGs against p-values, top-K selection, and evaluation
//! metrics against a known truth.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::ci::CiTable;
use crate::diffsep::{ScoreConfig, SeparationStatements};
use crate::error::{Error, Result};
use crate::graph::{BinaryDag, DiscreteSeparation, WeightMatrix};
use crate::logic::Temperature;

pub const DEFAULT_ALPHA_EVAL: f64 = 1e-5;

/// A pruned sample together with its selection score.
#[derive(Clone, Debug, PartialEq)]
pub struct DagCandidate {
    pub dag: BinaryDag,
    pub tptn: f64,
    pub step: usize,
}

/// p-value mass agreeing / disagreeing with a DAG's separation statements.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AgreementMass {
    pub tp: f64,
    pub tn: f64,
    pub fp: f64,
    pub fn_: f64,
}

impl AgreementMass {
    fn add(&mut self, separated: bool, p: f64) {
        if separated {
            self.tp += p;
            self.fp += 1.0 - p;
        } else {
            self.tn += 1.0 - p;
            self.fn_ += p;
        }
    }

    /// `(TP + TN) / (TP + TN + FP + FN)`, or 0 with no mass at all.
    pub fn ratio(&self) -> f64 {
        let total = self.tp + self.tn + self.fp + self.fn_;
        if total > 0.0 {
            (self.tp + self.tn) / total
        } else {
            0.0
        }
    }
}

/// Weighted agreement of `dag`'s order-0/1 separation statements with the
/// table. Statements come from the soft scores of the exact 0/1 weights at
/// temperature `alpha_eval`, thresholded at probability 1/2.
pub fn tptn_mass(dag: &BinaryDag, table: &CiTable, alpha_eval: Temperature) -> Result<AgreementMass> {
    let d = dag.n_nodes();
    if table.n_vars() != d {
        return Err(Error::domain(format!("DAG has {d} nodes, table has {} variables", table.n_vars())));
    }
    let w = WeightMatrix::from_graph(dag.graph());
    let st = SeparationStatements::new(&w, &ScoreConfig::new(alpha_eval));
    let mut mass = AgreementMass::default();
    for x in 0..d {
        for y in 0..x {
            mass.add(st.sep0(x, y), table.p0(x, y));
            for z in (0..d).filter(|&z| z != x && z != y) {
                mass.add(st.sep1(x, y, z), table.p1(x, y, z));
            }
        }
    }
    Ok(mass)
}

pub fn tptn_ratio(dag: &BinaryDag, table: &CiTable, alpha_eval: Temperature) -> Result<f64> {
    tptn_mass(dag, table, alpha_eval).map(|m| m.ratio())
}

/// The `k` best distinct candidates by TPTN ratio, ties going to the later
/// step. Repeated adjacencies keep only their best-ranked occurrence.
pub fn select_topk(cands: &[DagCandidate], k: usize) -> Result<Vec<DagCandidate>> {
    if k == 0 {
        return Err(Error::Config("top-K needs k >= 1".into()));
    }
    let mut ranked: Vec<&DagCandidate> = cands.iter().collect();
    ranked.sort_by(|a, b| b.tptn.total_cmp(&a.tptn).then(b.step.cmp(&a.step)));
    let mut seen = HashSet::new();
    let out: Vec<DagCandidate> =
        ranked.into_iter().filter(|c| seen.insert(c.dag.adjacency().to_vec())).take(k).cloned().collect();
    if out.len() < k {
        log::warn!("only {} distinct candidates for top-{k}", out.len());
    }
    Ok(out)
}

fn same_size(pred: &BinaryDag, truth: &BinaryDag) -> Result<usize> {
    if pred.n_nodes() != truth.n_nodes() {
        return Err(Error::domain(format!(
            "predicted graph has {} nodes, truth has {}",
            pred.n_nodes(),
            truth.n_nodes()
        )));
    }
    Ok(pred.n_nodes())
}

/// Confusion counts of `pred`'s order-0/1 separation statements against
/// `truth`'s, with "separated" as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    /// Matthews correlation. When a marginal is empty the correlation is
    /// undefined: an error-free prediction scores 1, anything else 0.
    pub fn mcc(&self) -> f64 {
        let (tp, tn, fp, fn_) = (self.tp as f64, self.tn as f64, self.fp as f64, self.fn_ as f64);
        let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
        if denom == 0.0 {
            return if self.fp + self.fn_ == 0 { 1.0 } else { 0.0 };
        }
        (tp * tn - fp * fn_) / denom.sqrt()
    }
}

pub fn ci_confusion(pred: &BinaryDag, truth: &BinaryDag) -> Result<Confusion> {
    let d = same_size(pred, truth)?;
    let (ps, ts) = (DiscreteSeparation::new(pred), DiscreteSeparation::new(truth));
    let mut c = Confusion::default();
    let mut add = |p: bool, t: bool| match (p, t) {
        (true, true) => c.tp += 1,
        (false, false) => c.tn += 1,
        (true, false) => c.fp += 1,
        (false, true) => c.fn_ += 1,
    };
    for x in 0..d {
        for y in 0..x {
            add(ps.dsep0(x, y)?, ts.dsep0(x, y)?);
            for z in (0..d).filter(|&z| z != x && z != y) {
                add(ps.dsep1(x, y, z)?, ts.dsep1(x, y, z)?);
            }
        }
    }
    Ok(c)
}

/// Matthews correlation between the low-order separation statements of
/// `pred` and `truth`.
pub fn ci_mcc(pred: &BinaryDag, truth: &BinaryDag) -> Result<f64> {
    ci_confusion(pred, truth).map(|c| c.mcc())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureMetrics {
    pub skeleton_f1: f64,
    pub dag_f1: f64,
    pub shd: usize,
}

/// F1 of a predicted set against a true one; two empty sets score 1.
fn f1<T: Eq + std::hash::Hash>(pred: &HashSet<T>, truth: &HashSet<T>) -> f64 {
    if pred.is_empty() && truth.is_empty() {
        return 1.0;
    }
    let hit = pred.intersection(truth).count() as f64;
    2.0 * hit / (pred.len() + truth.len()) as f64
}

pub fn structure_metrics(pred: &BinaryDag, truth: &BinaryDag) -> Result<StructureMetrics> {
    let d = same_size(pred, truth)?;
    let directed = |g: &BinaryDag| g.edges().collect::<HashSet<_>>();
    let undirected = |g: &BinaryDag| g.edges().map(|(u, v)| (u.min(v), u.max(v))).collect::<HashSet<_>>();
    let state = |g: &BinaryDag, i: usize, j: usize| (g.has_edge(i, j), g.has_edge(j, i));
    let mut shd = 0;
    for i in 0..d {
        for j in 0..i {
            if state(pred, i, j) != state(truth, i, j) {
                shd += 1;
            }
        }
    }
    Ok(StructureMetrics {
        skeleton_f1: f1(&undirected(pred), &undirected(truth)),
        dag_f1: f1(&directed(pred), &directed(truth)),
        shd,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ci_mcc: f64,
    pub skeleton_f1: f64,
    pub dag_f1: f64,
    pub shd: usize,
}

pub fn metric_report(pred: &BinaryDag, truth: &BinaryDag) -> Result<MetricReport> {
    let s = structure_metrics(pred, truth)?;
    Ok(MetricReport { ci_mcc: ci_mcc(pred, truth)?, skeleton_f1: s.skeleton_f1, dag_f1: s.dag_f1, shd: s.shd })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dag(n: usize, e: &[(usize, usize)]) -> BinaryDag {
        BinaryDag::from_edges(n, e).unwrap()
    }

    fn eval_temp() -> Temperature {
        Temperature::new(DEFAULT_ALPHA_EVAL).unwrap()
    }

    #[test]
    fn oracle_table_scores_one() {
        let g = dag(5, &[(0, 1), (1, 2), (3, 2), (3, 4)]);
        let t = CiTable::oracle(&g);
        assert_eq!(tptn_ratio(&g, &t, eval_temp()).unwrap(), 1.0);
        let other = dag(5, &[(1, 0), (2, 4)]);
        assert!(tptn_ratio(&other, &t, eval_temp()).unwrap() < 1.0);
    }

    #[test]
    fn flat_table_scores_half() {
        let t = CiTable::from_fn(4, |_, _| 0.5, |_, _, _| 0.5).unwrap();
        for g in [dag(4, &[]), dag(4, &[(0, 1), (1, 2), (2, 3)])] {
            assert_eq!(tptn_ratio(&g, &t, eval_temp()).unwrap(), 0.5);
        }
    }

    #[test]
    fn topk_tie_and_dedup_rules() {
        let a = dag(3, &[(0, 1)]);
        let b = dag(3, &[(1, 2)]);
        let c = |g: &BinaryDag, tptn, step| DagCandidate { dag: g.clone(), tptn, step };
        let top = select_topk(&[c(&a, 0.7, 10), c(&b, 0.7, 500)], 1).unwrap();
        assert_eq!(top[0].step, 500);
        let top = select_topk(&[c(&a, 0.7, 1), c(&a, 0.7, 2), c(&a, 0.7, 3), c(&b, 0.1, 4)], 5).unwrap();
        assert_eq!(top.len(), 2);
        assert_eq!(top[0].step, 3);
        let inc: Vec<_> = (0..5).map(|i| c(&dag(3, &[(0, 1 + i % 2)]), i as f64 / 10.0, i)).collect();
        assert_eq!(select_topk(&inc, 1).unwrap()[0].step, 4);
        assert!(select_topk(&inc, 0).is_err());
    }

    #[test]
    fn mcc_against_empty_prediction() {
        // Truth chain 0->1->2: of the 3 + 3 statements only (0,2|1) is a
        // separation. The empty graph predicts all six separated:
        // TP = 1, FP = 5, TN = FN = 0, so the TN + FN factor vanishes.
        let truth = dag(3, &[(0, 1), (1, 2)]);
        let c = ci_confusion(&dag(3, &[]), &truth).unwrap();
        assert_eq!(c, Confusion { tp: 1, tn: 0, fp: 5, fn_: 0 });
        assert_eq!(c.mcc(), 0.0);
        assert_eq!(ci_mcc(&truth, &truth).unwrap(), 1.0);
        // One dependent pair and nothing else: a single-class truth.
        let edge = dag(2, &[(0, 1)]);
        assert_eq!(ci_mcc(&edge, &edge).unwrap(), 1.0);
        assert_eq!(ci_mcc(&dag(2, &[]), &edge).unwrap(), 0.0);
    }

    #[test]
    fn structure_metric_examples() {
        let truth = dag(4, &[(0, 1), (1, 2), (2, 3)]);
        let m = structure_metrics(&truth, &truth).unwrap();
        assert_eq!((m.skeleton_f1, m.dag_f1, m.shd), (1.0, 1.0, 0));
        let rev = dag(4, &[(1, 0), (1, 2), (2, 3)]);
        let m = structure_metrics(&rev, &truth).unwrap();
        assert_eq!((m.skeleton_f1, m.shd), (1.0, 1));
        assert!(m.dag_f1 < 1.0);
        let m = structure_metrics(&dag(4, &[]), &truth).unwrap();
        assert_eq!((m.dag_f1, m.shd), (0.0, 3));
        assert!(structure_metrics(&dag(3, &[]), &truth).is_err());
    }
}
