//! On-disk p-value tables.
//!
//! One directory per (dataset hash, test name) holding `order0.csv`
//! (`x,y,pvalue`), `order1.csv` (`x,y,z,pvalue`) and `meta.json`. A table is
//! written into a scratch directory and renamed into place, so readers never
//! observe a half-written entry; concurrent writers resolve last-write-wins.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CiTable;
use crate::error::{Error, Result};

const ORDER0_FILE: &str = "order0.csv";
const ORDER1_FILE: &str = "order1.csv";
const META_FILE: &str = "meta.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableMeta {
    pub dataset_hash: String,
    pub test: String,
    pub n_samples: usize,
    pub n_vars: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
}

#[derive(Clone, Debug)]
pub struct PvalueCache {
    root: PathBuf,
}

impl PvalueCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        PvalueCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entry_dir(&self, dataset_hash: &str, test: &str) -> PathBuf {
        let short = &dataset_hash[..dataset_hash.len().min(16)];
        self.root.join(format!("{short}-{test}"))
    }

    /// The cached table, if one exists for exactly this hash and test.
    pub fn load(&self, dataset_hash: &str, test: &str) -> Result<Option<CiTable>> {
        let dir = self.entry_dir(dataset_hash, test);
        if !dir.join(META_FILE).is_file() {
            return Ok(None);
        }
        let (table, meta) = read_table_dir(&dir)?;
        if meta.dataset_hash != dataset_hash || meta.test != test {
            return Ok(None);
        }
        Ok(Some(table))
    }

    pub fn store(&self, table: &CiTable, meta: &TableMeta) -> Result<PathBuf> {
        let dest = self.entry_dir(&meta.dataset_hash, &meta.test);
        write_table_dir_atomic(&dest, table, meta)?;
        Ok(dest)
    }
}

/// Writes a table directory at `dest`, replacing any previous one.
pub fn write_table_dir_atomic(dest: &Path, table: &CiTable, meta: &TableMeta) -> Result<()> {
    let parent = dest.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    let name = dest.file_name().and_then(|n| n.to_str()).unwrap_or("table");
    let scratch = parent.join(format!(".{name}.tmp-{}", std::process::id()));
    if scratch.exists() {
        fs::remove_dir_all(&scratch).map_err(|e| Error::io(&scratch, e))?;
    }
    fs::create_dir_all(&scratch).map_err(|e| Error::io(&scratch, e))?;
    let (o0, o1, m) = render_table(table, meta)?;
    for (file, body) in [(ORDER0_FILE, o0), (ORDER1_FILE, o1), (META_FILE, m)] {
        let p = scratch.join(file);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    }
    if dest.exists() {
        fs::remove_dir_all(dest).map_err(|e| Error::io(dest, e))?;
    }
    fs::rename(&scratch, dest).map_err(|e| Error::io(dest, e))
}

pub fn read_table_dir(dir: &Path) -> Result<(CiTable, TableMeta)> {
    let read = |f: &str| {
        let p = dir.join(f);
        fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    };
    parse_table(&read(META_FILE)?, &read(ORDER0_FILE)?, &read(ORDER1_FILE)?)
}

/// Renders the three files of a table directory.
pub fn render_table(table: &CiTable, meta: &TableMeta) -> Result<(String, String, String)> {
    let d = table.n_vars();
    let mut o0 = String::from("x,y,pvalue\n");
    let mut o1 = String::from("x,y,z,pvalue\n");
    for x in 0..d {
        for y in 0..x {
            o0.push_str(&format!("{x},{y},{}\n", table.p0(x, y)));
            for z in (0..d).filter(|&z| z != x && z != y) {
                o1.push_str(&format!("{x},{y},{z},{}\n", table.p1(x, y, z)));
            }
        }
    }
    let m = serde_json::to_string_pretty(meta)? + "\n";
    Ok((o0, o1, m))
}

/// Parses the three files of a table directory. Every query must appear
/// exactly once (in either orientation of `x, y`).
pub fn parse_table(meta_json: &str, order0_csv: &str, order1_csv: &str) -> Result<(CiTable, TableMeta)> {
    let meta: TableMeta = serde_json::from_str(meta_json)?;
    let d = meta.n_vars;
    if d > 4096 {
        return Err(Error::parse(1, format!("n_vars {d} is implausibly large")));
    }
    let p0 = parse_rows(order0_csv, 2, d)?;
    let p1 = parse_rows(order1_csv, 3, d)?;
    // Check counts before allocating the dense d^3 table.
    let n0 = d * d.saturating_sub(1) / 2;
    let n1 = n0 * d.saturating_sub(2);
    if (p0.len(), p1.len()) != (n0, n1) {
        return Err(Error::parse(
            0,
            format!("tables hold {} and {} rows, expected {n0} and {n1} for {d} variables", p0.len(), p1.len()),
        ));
    }
    let missing = |what: &str| Error::parse(0, format!("{what} table is incomplete for {d} variables"));
    let table = CiTable::try_from_fn(
        d,
        |x, y| p0.get(&[x, y, 0][..]).copied().ok_or_else(|| missing("order-0")),
        |x, y, z| p1.get(&[x, y, z][..]).copied().ok_or_else(|| missing("order-1")),
    )?;
    Ok((table, meta))
}

/// Rows `i_1, .., i_k, p`; keys are canonicalized to `[max(x,y), min(x,y), z|0]`.
fn parse_rows(text: &str, k: usize, d: usize) -> Result<HashMap<Vec<usize>, f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != k + 1 {
            return Err(Error::parse(line, format!("expected {} fields, got {}", k + 1, rec.len())));
        }
        let mut idx = Vec::with_capacity(3);
        for f in rec.iter().take(k) {
            let v: usize = f.parse().map_err(|_| Error::parse(line, format!("bad variable index {f:?}")))?;
            if v >= d {
                return Err(Error::parse(line, format!("variable index {v} out of range")));
            }
            idx.push(v);
        }
        let p: f64 = rec[k].parse().map_err(|_| Error::parse(line, format!("bad p-value {:?}", &rec[k])))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::parse(line, format!("p-value {p} outside [0,1]")));
        }
        let (x, y) = (idx[0].max(idx[1]), idx[0].min(idx[1]));
        let z = if k == 3 { idx[2] } else { 0 };
        if x == y || (k == 3 && (z == x || z == y)) {
            return Err(Error::parse(line, format!("degenerate query {idx:?}")));
        }
        if out.insert(vec![x, y, z], p).is_some() {
            return Err(Error::parse(line, format!("duplicate query {idx:?}")));
        }
    }
    Ok(out)
}
