//! Sample files and atomic output.
//!
//! Samples are plain text, one floating-point value per line with `.` as
//! the decimal separator and no header. Blank lines are skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_sample(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        let value: f64 = field.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("`{field}` is not a number"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("`{field}` is not finite"),
            });
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(values)
}

pub fn read_sample(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_sample(&text)
}

/// 1-based line number of the `index`-th value of a sample file.
pub fn line_of_value(text: &str, index: usize) -> Option<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .nth(index)
        .map(|(i, _)| i + 1)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
