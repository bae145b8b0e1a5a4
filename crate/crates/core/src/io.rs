//! Text formats: adjacency and weight matrices, datasets, and chain traces.
//!
//! Matrices are headerless CSV with row `i`, column `j` holding the entry for
//! `i -> j`. Datasets are CSV with a header row naming the columns. Traces are
//! JSON lines, one [`TraceRecord`] per line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::ci::Dataset;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, WeightMatrix};
use crate::sampler::TraceRecord;

/// Largest matrix side or column count accepted from text.
const MAX_DIM: usize = 4096;

fn reader(text: &str, headers: bool) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

/// Square matrix of reals, validated row by row.
fn parse_square(text: &str, what: &str) -> Result<(usize, Vec<f64>)> {
    let mut values = Vec::new();
    let mut d = None;
    for (i, rec) in reader(text, false).records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        let width = *d.get_or_insert(rec.len());
        if width > MAX_DIM {
            return Err(Error::parse(line, format!("{what} with {width} columns is implausibly large")));
        }
        if rec.len() != width {
            return Err(Error::parse(line, format!("row has {} entries, expected {width}", rec.len())));
        }
        if i >= width {
            return Err(Error::parse(line, format!("more than {width} rows in a {width}-column {what}")));
        }
        for f in rec.iter() {
            let v: f64 = f.parse().map_err(|_| Error::parse(line, format!("bad {what} entry {f:?}")))?;
            values.push(v);
        }
    }
    let d = d.ok_or_else(|| Error::parse(1, format!("empty {what}")))?;
    if values.len() != d * d {
        return Err(Error::parse(values.len() / d + 1, format!("{what} has {} rows, expected {d}", values.len() / d)));
    }
    Ok((d, values))
}

/// Parses a 0/1 adjacency matrix. Self-loops are rejected.
pub fn parse_adjacency(text: &str) -> Result<DirectedGraph> {
    let (d, values) = parse_square(text, "adjacency matrix")?;
    let mut adj = Vec::with_capacity(d * d);
    for (k, v) in values.into_iter().enumerate() {
        let bit = match v {
            0.0 => false,
            1.0 => true,
            _ => return Err(Error::parse(k / d + 1, format!("adjacency entry {v} is not 0 or 1"))),
        };
        adj.push(bit);
    }
    DirectedGraph::from_adjacency(d, adj)
}

pub fn render_adjacency(g: &DirectedGraph) -> String {
    let d = g.n_nodes();
    let mut out = String::new();
    for i in 0..d {
        let row: Vec<&str> = (0..d).map(|j| if g.has_edge(i, j) { "1" } else { "0" }).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses a matrix of edge probabilities in `[0, 1]` with a zero diagonal.
pub fn parse_weights(text: &str) -> Result<WeightMatrix> {
    let (d, values) = parse_square(text, "weight matrix")?;
    let w = Array2::from_shape_vec((d, d), values).expect("d x d values");
    WeightMatrix::from_probabilities(&w)
}

pub fn render_weights(w: &WeightMatrix) -> String {
    let d = w.n_nodes();
    let mut out = String::new();
    for i in 0..d {
        let row: Vec<String> = (0..d).map(|j| format!("{}", w.get(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// How dataset columns get their kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ColumnTyping {
    /// Integer columns with few levels are categorical, the rest continuous.
    #[default]
    Infer,
    /// Every column is continuous.
    Continuous,
}

/// Parses a dataset CSV whose first row names the columns.
pub fn parse_dataset(text: &str, typing: ColumnTyping) -> Result<Dataset> {
    let mut rdr = reader(text, true);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(Error::parse(1, "missing header row"));
    }
    if names.len() > MAX_DIM {
        return Err(Error::parse(1, format!("{} columns is implausibly many", names.len())));
    }
    let mut columns = vec![Vec::new(); names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i + 2, |p| p.line() as usize);
        if rec.len() != names.len() {
            return Err(Error::parse(line, format!("row has {} fields, expected {}", rec.len(), names.len())));
        }
        for (col, (f, name)) in columns.iter_mut().zip(rec.iter().zip(&names)) {
            let v: f64 = f.parse().map_err(|_| Error::parse(line, format!("column {name}: bad value {f:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(line, format!("column {name}: non-finite value {f:?}")));
            }
            col.push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(Error::parse(2, "dataset has no rows"));
    }
    let data = Dataset::with_inferred_kinds(names, columns)?;
    Ok(match typing {
        ColumnTyping::Infer => data,
        ColumnTyping::Continuous => data.into_continuous(),
    })
}

/// Writes a dataset with its header; categorical levels are printed as
/// integers.
pub fn render_dataset(data: &Dataset) -> String {
    let mut out = data.names().join(",");
    out.push('\n');
    for r in 0..data.n_samples() {
        for c in 0..data.n_vars() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", data.column(c)[r]);
        }
        out.push('\n');
    }
    out
}

pub fn render_trace(records: &[TraceRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a JSON-lines trace; blank lines are skipped.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(i + 1, e.to_string())))
        .collect()
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `body` to `path`, creating parent directories.
pub fn write_text(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}
