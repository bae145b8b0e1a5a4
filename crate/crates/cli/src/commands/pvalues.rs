//! `pvalues`: order-0/1 p-value tables, through the on-disk cache.

use std::path::Path;
use std::time::{Duration, Instant};

use softsep::ci::{build_ci_table_cached, CacheStatus, CiTable, CiTest, Dataset, PvalueCache};
use softsep::io::{self, ColumnTyping};

use super::read_parsed;
use crate::error::CliResult;

pub struct PvalueSummary {
    pub table: CiTable,
    pub status: CacheStatus,
    pub test: CiTest,
    pub elapsed: Duration,
}

impl PvalueSummary {
    pub fn render(&self) -> String {
        let t = &self.table;
        let status = match self.status {
            CacheStatus::Hit => "cache hit",
            CacheStatus::Miss => "cache miss",
        };
        format!(
            "d = {}, |I0| = {}, |I1| = {}, M0 = {:.6}, M1 = {:.6}, test = {}, {status}, {:.3} s",
            t.n_vars(),
            t.n_order0(),
            t.n_order1(),
            t.m0(),
            t.m1(),
            self.test,
            self.elapsed.as_secs_f64()
        )
    }
}

pub fn load_dataset(path: &Path, continuous: bool) -> CliResult<Dataset> {
    let typing = if continuous { ColumnTyping::Continuous } else { ColumnTyping::Infer };
    read_parsed(path, |t| io::parse_dataset(t, typing))
}

pub fn run(data: &Dataset, test: CiTest, cache_dir: &Path) -> CliResult<PvalueSummary> {
    let start = Instant::now();
    let (table, status) = build_ci_table_cached(data, test, &PvalueCache::new(cache_dir))?;
    Ok(PvalueSummary { table, status, test: test.resolve(data), elapsed: start.elapsed() })
}
