//! Dataset and net CSV files.
//!
//! Datasets have the header `x0,...,x{d-1},y`; nets have `dim0,...`. Reals
//! are written with 17 significant digits so they read back bit-for-bit.

use std::io::{Read, Write};
use std::path::Path;

use dpl1_core::{Dataset, Net};

use crate::error::{CliError, CliResult};

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn dataset_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = (0..dim).map(|j| format!("x{j}")).collect();
    h.push("y".to_string());
    h
}

pub fn write_dataset<W: Write>(out: W, data: &Dataset) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(dataset_header(data.dim()))?;
    let mut row = Vec::with_capacity(data.dim() + 1);
    for (x, y) in data.records() {
        row.clear();
        row.extend(x.iter().map(|&v| format_real(v)));
        row.push(format_real(y));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset(path: &Path, data: &Dataset) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_dataset(std::io::BufWriter::new(file), data).map_err(|e| CliError::io(path, e))
}

/// Parses a dataset. `source` names the input in error messages.
pub fn read_dataset<R: Read>(input: R, source: &str) -> CliResult<Dataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r
        .headers()
        .map_err(|e| CliError::invalid(format!("{source}: {e}")))?
        .clone();
    if header.len() < 2 {
        return Err(CliError::invalid(format!(
            "{source}: header must be x0,...,x{{d-1}},y with d >= 1"
        )));
    }
    let dim = header.len() - 1;
    let expected = dataset_header(dim);
    if header.iter().zip(&expected).any(|(a, b)| a.trim() != b) {
        return Err(CliError::invalid(format!(
            "{source}: header must be {}, got {}",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::invalid(format!("{source}: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::invalid(format!("{source}: line {line}: column {j}: not a number: {field:?}"))
            })?;
            if !v.is_finite() {
                return Err(CliError::invalid(format!(
                    "{source}: line {line}: column {j}: non-finite value {field:?}"
                )));
            }
            if j < dim {
                xs.push(v);
            } else {
                ys.push(v);
            }
        }
    }
    if ys.is_empty() {
        return Err(CliError::invalid(format!("{source}: no records after the header")));
    }
    Dataset::new(xs, ys, dim).map_err(|e| CliError::core(source, e))
}

pub fn load_dataset(path: &Path) -> CliResult<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_dataset(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn write_net<W: Write>(out: W, net: &Net) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((0..net.dim()).map(|j| format!("dim{j}")))?;
    for p in net.points() {
        w.write_record(p.iter().map(|&v| format_real(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_net(path: &Path, net: &Net) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_net(std::io::BufWriter::new(file), net).map_err(|e| CliError::io(path, e))
}
