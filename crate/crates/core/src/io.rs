//! File formats: potential CSV (`x,sigma` at cell midpoints) and small CSV
//! table writers used for plot-ready output.

use crate::error::{Result, SlError};
use crate::grid::RealGrid;
use crate::potential::PotentialSigma;
use std::io::{Read, Write};
use std::path::Path;

pub fn write_sigma_csv<W: Write>(sigma: &PotentialSigma, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "sigma"])?;
    for (j, v) in sigma.values().iter().enumerate() {
        w.write_record([
            format_num(sigma.grid().midpoint(j)),
            format_num(*v),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a potential; the number of rows fixes the grid, and every `x` must
/// sit on the corresponding cell midpoint.
pub fn read_sigma_csv<R: Read>(input: R) -> Result<PotentialSigma> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "sigma" {
        return Err(SlError::Parse(format!(
            "expected header \"x,sigma\", found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut xs = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| SlError::Parse(format!("bad number {s:?}: {e}")))
        };
        xs.push(parse(&rec[0])?);
        values.push(parse(&rec[1])?);
    }
    let grid = RealGrid::new(values.len())?;
    for (j, &x) in xs.iter().enumerate() {
        if (x - grid.midpoint(j)).abs() > 1e-6 * grid.step() + 1e-9 {
            return Err(SlError::Parse(format!(
                "row {j}: x = {x} is not the midpoint {} of a {}-cell grid",
                grid.midpoint(j),
                grid.cells()
            )));
        }
    }
    PotentialSigma::new(grid, values)
}

pub fn load_sigma(path: &Path) -> Result<PotentialSigma> {
    let file = std::fs::File::open(path)?;
    read_sigma_csv(file)
}

pub fn save_sigma(sigma: &PotentialSigma, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_sigma_csv(sigma, std::io::BufWriter::new(file))
}

/// Writes a header plus numeric rows.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_num(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_table(std::io::BufWriter::new(file), header, rows)
}

/// Writes a header plus pre-formatted rows.
pub fn write_text_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_text_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_text_table(std::io::BufWriter::new(file), header, rows)
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_num(v: f64) -> String {
    format!("{v:?}")
}
