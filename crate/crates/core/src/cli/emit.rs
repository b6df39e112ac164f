//! Stable text output: fixed-precision CSV and pretty JSON.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pricing::SeriesRow;

/// Ten fixed decimals with negative zero printed as zero.
pub fn fixed(v: f64) -> String {
    let s = format!("{v:.10}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Writes `N,upper,lower,fast_path_used` rows.
pub fn emit_convergence(series: &[SeriesRow], mut w: impl Write) -> Result<()> {
    if series.is_empty() {
        return Err(Error::BadParams("empty convergence series".into()));
    }
    writeln!(w, "N,upper,lower,fast_path_used")?;
    for r in series {
        writeln!(w, "{},{},{},{}", r.n, fixed(r.upper), fixed(r.lower), r.fast_path_used)?;
    }
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
