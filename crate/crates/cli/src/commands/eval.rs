//! `eval`: metrics of predicted DAGs against truths, a batch CSV and
//! empirical CDF points per metric.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use softsep::graph::BinaryDag;
use softsep::io;
use softsep::select::{metric_report, MetricReport};

use super::read_parsed;
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

pub const REPORT_FILE: &str = "report.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const METRICS: [&str; 4] = ["ci_mcc", "skeleton_f1", "dag_f1", "shd"];

/// One prediction to score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub pred: PathBuf,
    pub truth: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub pred: PathBuf,
    pub truth: PathBuf,
    #[serde(flatten)]
    pub report: MetricReport,
}

impl EvalRow {
    pub fn metric(&self, name: &str) -> f64 {
        match name {
            "ci_mcc" => self.report.ci_mcc,
            "skeleton_f1" => self.report.skeleton_f1,
            "dag_f1" => self.report.dag_f1,
            "shd" => self.report.shd as f64,
            _ => unreachable!("unknown metric {name}"),
        }
    }
}

pub fn read_dag(path: &Path) -> CliResult<BinaryDag> {
    let g = read_parsed(path, io::parse_adjacency)?;
    BinaryDag::new(g).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Every `*.csv` directly inside `dir`, sorted by name.
pub fn csv_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
        .collect();
    out.sort();
    Ok(out)
}

/// A batch file: CSV with header `pred,truth`; relative paths resolve
/// against the batch file's directory.
pub fn parse_batch(text: &str, base: &Path) -> CliResult<Vec<EvalPair>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.deserialize::<EvalPair>() {
        let p = rec.map_err(|e| CliError::usage(format!("batch file: {e}")))?;
        out.push(EvalPair { pred: base.join(p.pred), truth: base.join(p.truth) });
    }
    Ok(out)
}

pub fn evaluate(pairs: &[EvalPair]) -> CliResult<Vec<EvalRow>> {
    if pairs.is_empty() {
        return Err(CliError::usage("nothing to evaluate"));
    }
    pairs
        .iter()
        .map(|p| {
            let (pred, truth) = (read_dag(&p.pred)?, read_dag(&p.truth)?);
            if pred.n_nodes() != truth.n_nodes() {
                return Err(CliError::usage(format!(
                    "{} has {} nodes but {} has {}",
                    p.pred.display(),
                    pred.n_nodes(),
                    p.truth.display(),
                    truth.n_nodes()
                )));
            }
            Ok(EvalRow { pred: p.pred.clone(), truth: p.truth.clone(), report: metric_report(&pred, &truth)? })
        })
        .collect()
}

pub fn render_metrics_csv(rows: &[EvalRow]) -> String {
    let mut out = String::from("pred,truth,ci_mcc,skeleton_f1,dag_f1,shd\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.pred.display(),
            r.truth.display(),
            r.report.ci_mcc,
            r.report.skeleton_f1,
            r.report.dag_f1,
            r.report.shd
        ));
    }
    out
}

/// Sorted values with 1-based ranks and `rank / n`.
pub fn ecdf(values: &[f64]) -> Vec<(f64, usize, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.into_iter().enumerate().map(|(i, x)| (x, i + 1, (i + 1) as f64 / n)).collect()
}

pub fn render_ecdf(points: &[(f64, usize, f64)]) -> String {
    let mut out = String::from("value,rank,cdf\n");
    for (x, r, c) in points {
        out.push_str(&format!("{x},{r},{c}\n"));
    }
    out
}

pub fn ecdf_file(metric: &str) -> String {
    format!("ecdf_{metric}.csv")
}

/// Scores every pair and writes the report, the batch CSV and one ECDF
/// file per metric under `out`.
pub fn run(pairs: &[EvalPair], out: &Path) -> CliResult<Vec<EvalRow>> {
    let rows = evaluate(pairs)?;
    let body = serde_json::to_string_pretty(&rows).map_err(softsep::Error::from)? + "\n";
    io::write_text(&out.join(REPORT_FILE), &body)?;
    io::write_text(&out.join(METRICS_FILE), &render_metrics_csv(&rows))?;
    for m in METRICS {
        let values: Vec<f64> = rows.iter().map(|r| r.metric(m)).collect();
        io::write_text(&out.join(ecdf_file(m)), &render_ecdf(&ecdf(&values)))?;
    }
    Manifest::new("eval", &pairs, Vec::new())?
        .output("report", REPORT_FILE)
        .output("metrics", METRICS_FILE)
        .output("ecdf", METRICS.iter().map(|m| ecdf_file(m)).collect::<Vec<_>>())
        .write(out)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_is_sorted_and_ends_at_one() {
        let pts = ecdf(&[0.5, -0.1, 1.0, 0.5]);
        assert_eq!(pts.iter().map(|p| p.0).collect::<Vec<_>>(), vec![-0.1, 0.5, 0.5, 1.0]);
        assert_eq!(pts.last().unwrap().2, 1.0);
        assert!(pts.windows(2).all(|w| w[0].2 < w[1].2));
    }

    #[test]
    fn batch_paths_resolve_against_base() {
        let pairs = parse_batch("pred,truth\na/p.csv, t.csv\n", Path::new("/x")).unwrap();
        assert_eq!(pairs[0].pred, PathBuf::from("/x/a/p.csv"));
        assert_eq!(pairs[0].truth, PathBuf::from("/x/t.csv"));
        assert!(parse_batch("pred\nonly\n", Path::new(".")).is_err());
    }
}
