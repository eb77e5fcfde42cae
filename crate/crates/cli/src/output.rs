use std::path::Path;

use nstorus::mild::write_atomic;
use serde::Serialize;

use crate::error::CliResult;

/// Shortest round-trip form, in exponent notation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| nstorus::Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| nstorus::Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(nstorus::Error::from)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(())
}
