//! Deterministic text formatting for CSV outputs.

use std::io::Write;

use crate::error::Result;

/// Shortest decimal that parses back to exactly `x`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

/// Writes one CSV row of floats terminated by `\n`.
pub fn write_row<W: Write>(out: &mut W, values: impl IntoIterator<Item = f64>) -> Result<()> {
    let line: Vec<String> = values.into_iter().map(fmt_float).collect();
    writeln!(out, "{}", line.join(","))?;
    Ok(())
}

pub fn write_header<W: Write, S: AsRef<str>>(out: &mut W, columns: &[S]) -> Result<()> {
    let cols: Vec<&str> = columns.iter().map(AsRef::as_ref).collect();
    writeln!(out, "{}", cols.join(","))?;
    Ok(())
}
