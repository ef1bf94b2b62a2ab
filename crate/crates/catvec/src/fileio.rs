use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Reads a text file and returns `(1-based line number, line)` for every line
/// that is neither blank nor a `#` comment. CRLF endings are tolerated.
pub(crate) fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    if !path.exists() {
        return Err(Error::MissingInput {
            path: path.to_path_buf(),
        });
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.trim_end_matches('\r');
            let head = line.trim_start();
            if head.is_empty() || head.starts_with('#') {
                None
            } else {
                Some((i + 1, line.to_string()))
            }
        })
        .collect())
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(BufWriter::new(file))
}

pub(crate) fn finish(mut w: BufWriter<fs::File>, path: &Path) -> Result<()> {
    w.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}
