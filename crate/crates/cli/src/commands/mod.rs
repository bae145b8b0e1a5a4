pub mod discover;
pub mod eval;
pub mod gen;
pub mod pvalues;

use std::path::Path;

use crate::error::{CliError, CliResult};

/// Reads and parses a file, naming the file in any error.
pub(crate) fn read_parsed<T>(path: &Path, parse: impl FnOnce(&str) -> softsep::Result<T>) -> CliResult<T> {
    let text = softsep::io::read_text(path)?;
    parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Refuses to write into `dir` when any of `files` already exists there.
pub(crate) fn check_fresh(dir: &Path, files: &[&str], force: bool) -> CliResult<()> {
    if force {
        return Ok(());
    }
    if let Some(f) = files.iter().map(|f| dir.join(f)).find(|p| p.exists()) {
        return Err(CliError::usage(format!("{} already exists (pass --force to overwrite)", f.display())));
    }
    Ok(())
}
