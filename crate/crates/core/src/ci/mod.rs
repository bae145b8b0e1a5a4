//! Conditional-independence tests and the table of low-order p-values.

mod cache;
mod stats;

use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{BinaryDag, DiscreteSeparation, QueryIndexSets};

pub use cache::{
    parse_table, read_table_dir, render_table, write_table_dir_atomic, CacheStatus, PvalueCache, TableMeta,
};
pub use stats::{chi_square, fisher_z};

/// Columns with integer values and at most this many distinct levels are
/// inferred as categorical.
pub const MAX_INFERRED_LEVELS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColumnKind {
    Continuous,
    Categorical { levels: usize },
}

/// Tabular samples, stored column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    n: usize,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    kinds: Vec<ColumnKind>,
}

impl Dataset {
    /// Builds a dataset with explicit column kinds. Categorical columns must
    /// hold integers in `[0, levels)`.
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>, kinds: Vec<ColumnKind>) -> Result<Self> {
        if names.len() != columns.len() || kinds.len() != columns.len() {
            return Err(Error::Config(format!(
                "{} names, {} columns and {} kinds",
                names.len(),
                columns.len(),
                kinds.len()
            )));
        }
        let n = columns.first().map_or(0, Vec::len);
        for (name, (col, kind)) in names.iter().zip(columns.iter().zip(&kinds)) {
            if col.len() != n {
                return Err(Error::Config(format!("column {name} has {} rows, expected {n}", col.len())));
            }
            if let Some(v) = col.iter().find(|v| !v.is_finite()) {
                return Err(Error::Config(format!("column {name} holds non-finite value {v}")));
            }
            if let ColumnKind::Categorical { levels } = *kind {
                if let Some(v) = col.iter().find(|&&v| v.fract() != 0.0 || v < 0.0 || v >= levels as f64) {
                    return Err(Error::Config(format!("column {name} declared with {levels} levels holds {v}")));
                }
            }
        }
        Ok(Dataset { n, names, columns, kinds })
    }

    /// Builds a dataset inferring column kinds: integer-valued columns with
    /// at most [`MAX_INFERRED_LEVELS`] distinct values become categorical,
    /// their values replaced by the rank of each level.
    pub fn with_inferred_kinds(names: Vec<String>, mut columns: Vec<Vec<f64>>) -> Result<Self> {
        let kinds = columns.iter_mut().map(|c| infer_and_remap(c)).collect();
        Dataset::new(names, columns, kinds)
    }

    /// Binary samples, one row per sample, columns named `x0..`.
    pub fn from_binary_rows(d: usize, rows: &[Vec<u8>]) -> Result<Self> {
        let mut columns = vec![Vec::with_capacity(rows.len()); d];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Config(format!("row {i} has {} values, expected {d}", row.len())));
            }
            for (c, &v) in columns.iter_mut().zip(row) {
                c.push(v as f64);
            }
        }
        Dataset::new(default_names(d), columns, vec![ColumnKind::Categorical { levels: 2 }; d])
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn n_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn kind(&self, i: usize) -> ColumnKind {
        self.kinds[i]
    }

    /// Treats every column as continuous.
    pub fn into_continuous(mut self) -> Self {
        self.kinds = vec![ColumnKind::Continuous; self.columns.len()];
        self
    }

    /// Hex SHA-256 over shape, kinds and values; keys the p-value cache.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        h.update((self.columns.len() as u64).to_le_bytes());
        for (col, kind) in self.columns.iter().zip(&self.kinds) {
            match kind {
                ColumnKind::Continuous => h.update([0u8]),
                ColumnKind::Categorical { levels } => {
                    h.update([1u8]);
                    h.update((*levels as u64).to_le_bytes());
                }
            }
            for v in col {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

pub fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("x{i}")).collect()
}

fn infer_and_remap(col: &mut [f64]) -> ColumnKind {
    if col.iter().any(|v| v.fract() != 0.0) {
        return ColumnKind::Continuous;
    }
    let mut levels: Vec<f64> = Vec::new();
    for &v in col.iter() {
        if !levels.contains(&v) {
            if levels.len() == MAX_INFERRED_LEVELS {
                return ColumnKind::Continuous;
            }
            levels.push(v);
        }
    }
    levels.sort_by(f64::total_cmp);
    for v in col.iter_mut() {
        *v = levels.iter().position(|l| l == v).expect("level recorded") as f64;
    }
    ColumnKind::Categorical { levels: levels.len().max(1) }
}

/// Which conditional-independence test to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CiTest {
    /// Partial-correlation z test; accepts any numeric column.
    FisherZ,
    /// Stratified Pearson chi-square; categorical columns only.
    ChiSquare,
    /// Chi-square when every column is categorical, Fisher-z otherwise.
    Auto,
}

impl CiTest {
    pub fn resolve(self, data: &Dataset) -> CiTest {
        match self {
            CiTest::Auto => {
                let all_cat = (0..data.n_vars()).all(|i| matches!(data.kind(i), ColumnKind::Categorical { .. }));
                if all_cat {
                    CiTest::ChiSquare
                } else {
                    CiTest::FisherZ
                }
            }
            t => t,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CiTest::FisherZ => "fisher-z",
            CiTest::ChiSquare => "chi-square",
            CiTest::Auto => "auto",
        }
    }

    /// Checks that the (resolved) test accepts every column of `data`.
    pub fn check_compatible(self, data: &Dataset) -> Result<()> {
        if self.resolve(data) == CiTest::ChiSquare {
            if let Some(i) = (0..data.n_vars()).find(|&i| data.kind(i) == ColumnKind::Continuous) {
                return Err(Error::Config(format!(
                    "chi-square test needs categorical columns but column {} ({}) is continuous",
                    i,
                    data.names()[i]
                )));
            }
        }
        Ok(())
    }

    /// p-value of `x ⊥ y | cond`.
    pub fn pvalue(self, data: &Dataset, x: usize, y: usize, cond: Option<usize>) -> Result<f64> {
        match self.resolve(data) {
            CiTest::ChiSquare => chi_square(data, x, y, cond),
            _ => fisher_z(data, x, y, cond),
        }
    }
}

impl fmt::Display for CiTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CiTest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fisher-z" | "fisherz" => Ok(CiTest::FisherZ),
            "chi-square" | "chisq" => Ok(CiTest::ChiSquare),
            "auto" => Ok(CiTest::Auto),
            _ => Err(Error::Config(format!("unknown CI test {s:?} (fisher-z, chi-square, auto)"))),
        }
    }
}

/// Every order-0 and order-1 p-value of a dataset, with their maxima.
#[derive(Clone, Debug, PartialEq)]
pub struct CiTable {
    d: usize,
    /// Dense symmetric `d x d`.
    p0: Vec<f64>,
    /// Dense `d x d x d`, symmetric in the first two indices.
    p1: Vec<f64>,
    m0: f64,
    m1: f64,
}

impl CiTable {
    /// Builds a table by evaluating `f0(x, y)` on every order-0 query and
    /// `f1(x, y, z)` on every order-1 query (`x > y`).
    pub fn try_from_fn<F0, F1>(d: usize, mut f0: F0, mut f1: F1) -> Result<Self>
    where
        F0: FnMut(usize, usize) -> Result<f64>,
        F1: FnMut(usize, usize, usize) -> Result<f64>,
    {
        let q = QueryIndexSets::new(d);
        let mut p0 = vec![0.0; d * d];
        let mut p1 = vec![0.0; d * d * d];
        for &(x, y) in &q.order0 {
            let p = check_p(f0(x, y)?)?;
            p0[x * d + y] = p;
            p0[y * d + x] = p;
        }
        for &(x, y, z) in &q.order1 {
            let p = check_p(f1(x, y, z)?)?;
            p1[(x * d + y) * d + z] = p;
            p1[(y * d + x) * d + z] = p;
        }
        Ok(Self::assemble(d, &q, p0, p1))
    }

    pub fn from_fn<F0, F1>(d: usize, mut f0: F0, mut f1: F1) -> Result<Self>
    where
        F0: FnMut(usize, usize) -> f64,
        F1: FnMut(usize, usize, usize) -> f64,
    {
        Self::try_from_fn(d, |x, y| Ok(f0(x, y)), |x, y, z| Ok(f1(x, y, z)))
    }

    /// Noiseless table: p = 1 where `dag` d-separates, 0 elsewhere.
    pub fn oracle(dag: &BinaryDag) -> Self {
        let sep = DiscreteSeparation::new(dag);
        let b = |s: bool| if s { 1.0 } else { 0.0 };
        Self::from_fn(
            dag.n_nodes(),
            |x, y| b(sep.dsep0(x, y).expect("valid pair")),
            |x, y, z| b(sep.dsep1(x, y, z).expect("valid triple")),
        )
        .expect("oracle p-values are 0 or 1")
    }

    fn assemble(d: usize, q: &QueryIndexSets, p0: Vec<f64>, p1: Vec<f64>) -> Self {
        let m0 = q.order0.iter().map(|&(x, y)| p0[x * d + y]).fold(0.0, f64::max);
        let m1 = q.order1.iter().map(|&(x, y, z)| p1[(x * d + y) * d + z]).fold(0.0, f64::max);
        CiTable { d, p0, p1, m0, m1 }
    }

    pub fn n_vars(&self) -> usize {
        self.d
    }

    /// Caller guarantees `x != y`.
    #[inline]
    pub fn p0(&self, x: usize, y: usize) -> f64 {
        self.p0[x * self.d + y]
    }

    /// Caller guarantees distinct `x, y, z`.
    #[inline]
    pub fn p1(&self, x: usize, y: usize, z: usize) -> f64 {
        self.p1[(x * self.d + y) * self.d + z]
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn n_order0(&self) -> usize {
        self.d * self.d.saturating_sub(1) / 2
    }

    pub fn n_order1(&self) -> usize {
        self.n_order0() * self.d.saturating_sub(2)
    }
}

fn check_p(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::domain(format!("p-value {p} outside [0,1]")))
    }
}

/// Runs `test` on every order-0 and order-1 query of `data`.
///
/// A query whose statistic is undefined on this sample (a constant column,
/// a perfectly collinear conditioning variable) gets p = 1 and a warning:
/// the data carries no evidence of dependence there.
pub fn build_ci_table(data: &Dataset, test: CiTest) -> Result<CiTable> {
    test.check_compatible(data)?;
    let test = test.resolve(data);
    let degenerate = std::cell::Cell::new(0usize);
    let run = |x: usize, y: usize, cond: Option<usize>| match test.pvalue(data, x, y, cond) {
        Err(Error::DegenerateData(msg)) => {
            degenerate.set(degenerate.get() + 1);
            log::debug!("query ({x},{y}|{cond:?}): {msg}; using p = 1");
            Ok(1.0)
        }
        other => other,
    };
    let table = CiTable::try_from_fn(data.n_vars(), |x, y| run(x, y, None), |x, y, z| run(x, y, Some(z)))?;
    let degenerate = degenerate.get();
    if degenerate > 0 {
        log::warn!("{degenerate} CI queries were degenerate on this sample and set to p = 1");
    }
    Ok(table)
}

/// [`build_ci_table`] through an on-disk cache keyed by dataset hash and
/// test name.
pub fn build_ci_table_cached(data: &Dataset, test: CiTest, cache: &PvalueCache) -> Result<(CiTable, CacheStatus)> {
    test.check_compatible(data)?;
    let resolved = test.resolve(data);
    let hash = data.content_hash();
    if let Some(t) = cache.load(&hash, resolved.name())? {
        return Ok((t, CacheStatus::Hit));
    }
    let table = build_ci_table(data, resolved)?;
    let meta = TableMeta {
        dataset_hash: hash,
        test: resolved.name().to_string(),
        n_samples: data.n_samples(),
        n_vars: data.n_vars(),
    };
    cache.store(&table, &meta)?;
    Ok((table, CacheStatus::Miss))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inference_remaps_levels() {
        let ds = Dataset::with_inferred_kinds(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![3.0, 7.0, 3.0, 5.0], vec![0.5, 1.0, 2.0, 3.0], (0..4).map(|v| v as f64).collect()],
        )
        .unwrap();
        assert_eq!(ds.kind(0), ColumnKind::Categorical { levels: 3 });
        assert_eq!(ds.column(0), &[0.0, 2.0, 0.0, 1.0]);
        assert_eq!(ds.kind(1), ColumnKind::Continuous);
        assert_eq!(ds.kind(2), ColumnKind::Categorical { levels: 4 });
        let many: Vec<f64> = (0..11).map(|v| v as f64).collect();
        let ds = Dataset::with_inferred_kinds(vec!["m".into()], vec![many]).unwrap();
        assert_eq!(ds.kind(0), ColumnKind::Continuous);
    }

    #[test]
    fn chi_square_rejects_continuous_columns() {
        let ds = Dataset::with_inferred_kinds(
            vec!["a".into(), "temp".into()],
            vec![vec![0.0, 1.0, 1.0], vec![0.5, 1.5, 2.5]],
        )
        .unwrap();
        let err = CiTest::ChiSquare.check_compatible(&ds).unwrap_err();
        assert!(err.to_string().contains("temp"), "{err}");
        assert_eq!(CiTest::Auto.resolve(&ds), CiTest::FisherZ);
    }

    #[test]
    fn table_cardinalities_and_maxima() {
        let t = CiTable::from_fn(4, |x, y| (x + y) as f64 / 10.0, |x, y, z| (x + y + z) as f64 / 20.0).unwrap();
        assert_eq!(t.n_order0(), 6);
        assert_eq!(t.n_order1(), 12);
        assert_eq!(t.m0(), 0.5);
        assert_eq!(t.m1(), 0.3);
        assert_eq!(t.p0(1, 3), t.p0(3, 1));
        assert_eq!(t.p1(1, 3, 0), t.p1(3, 1, 0));
    }

    #[test]
    fn oracle_table_for_chain() {
        let dag = BinaryDag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let t = CiTable::oracle(&dag);
        assert_eq!(t.p0(2, 0), 0.0);
        assert_eq!(t.p1(2, 0, 1), 1.0);
        assert_eq!(t.m1(), 1.0);
    }

    #[test]
    fn hash_depends_on_values() {
        let a = Dataset::from_binary_rows(2, &[vec![0, 1], vec![1, 1]]).unwrap();
        let b = Dataset::from_binary_rows(2, &[vec![0, 1], vec![1, 0]]).unwrap();
        assert_ne!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash(), a.clone().content_hash());
    }
}
