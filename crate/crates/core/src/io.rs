//! Loading matrices as CSV text: one row per variable, comma-separated
//! decimals, optional header line.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::matrix::LoadingMatrix;

/// Reads a loading matrix. A first line that does not parse as numbers is
/// taken as a header and skipped.
pub fn read_loadings<R: Read>(reader: R) -> Result<LoadingMatrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::invalid(format!("line {}: {e}", line + 1))),
        }
    }
    if rows.is_empty() {
        return Err(Error::invalid("no loading rows found"));
    }
    LoadingMatrix::from_rows(&rows)
}

pub fn read_loadings_file(path: &std::path::Path) -> Result<LoadingMatrix> {
    read_loadings(std::fs::File::open(path)?)
}

/// Writes `c1..ck` as header and full-precision rows.
pub fn write_loadings<W: Write>(lambda: &LoadingMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record((1..=lambda.ncols()).map(|j| format!("c{j}")))?;
    for row in lambda.as_matrix().row_iter() {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_loadings_file(lambda: &LoadingMatrix, path: &std::path::Path) -> Result<()> {
    write_loadings(lambda, std::fs::File::create(path)?)
}
