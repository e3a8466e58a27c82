//! Field CSV files and generic table output.
//!
//! A field file has the header `x0,...,x{n-1},t,value` and one row per
//! lattice point in flat order (first spatial axis fastest, time slowest).
//! Numbers carry 17 significant digits so that values round-trip exactly;
//! undefined samples are written as `undef`.

use std::io::{Read, Write};
use std::path::Path;

use parabmo_core::{GridSpec, SampledField};

use crate::Error;

pub const UNDEF: &str = "undef";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = (0..dim).map(|a| format!("x{a}")).collect();
    h.push("t".into());
    h.push("value".into());
    h
}

pub fn write_field<W: Write>(f: &SampledField, out: W) -> Result<(), Error> {
    let grid = f.grid();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(grid.dim()))?;
    for flat in 0..grid.len() {
        let (x, t) = grid.point(flat);
        let mut row: Vec<String> = x.iter().map(|&v| fmt_f64(v)).collect();
        row.push(fmt_f64(t));
        row.push(f.value(flat).map_or_else(|| UNDEF.to_string(), fmt_f64));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<field output>".into(),
        source: e,
    })?;
    Ok(())
}

/// Reads a field on `grid`; coordinates must match the lattice to within a
/// millionth of a cell.
pub fn read_field<R: Read>(grid: &GridSpec, input: R) -> Result<SampledField, Error> {
    let mut r = csv::Reader::from_reader(input);
    let want = header(grid.dim());
    let got: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if got != want {
        return Err(Error::Format(format!(
            "field header is {got:?}, expected {want:?}"
        )));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut defined = Vec::with_capacity(grid.len());
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        if row >= grid.len() {
            return Err(Error::Format(format!("line {line}: more rows than lattice points ({})", grid.len())));
        }
        let num = |col: usize| -> Result<f64, Error> {
            rec[col]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("line {line}, column {}: {e}", want[col])))
        };
        let (x, t) = grid.point(row);
        for (a, &xa) in x.iter().enumerate() {
            check_coord(num(a)?, xa, grid.h_x(a), line, &want[a])?;
        }
        check_coord(num(grid.dim())?, t, grid.h_t(), line, "t")?;
        let raw = rec[grid.dim() + 1].trim();
        if raw == UNDEF {
            values.push(0.0);
            defined.push(false);
        } else {
            values.push(num(grid.dim() + 1)?);
            defined.push(true);
        }
    }
    if values.len() != grid.len() {
        return Err(Error::Format(format!(
            "field has {} rows, the grid has {} lattice points",
            values.len(),
            grid.len()
        )));
    }
    Ok(SampledField::with_mask(grid.clone(), values, defined)?)
}

fn check_coord(got: f64, want: f64, h: f64, line: usize, col: &str) -> Result<(), Error> {
    if (got - want).abs() > 1e-6 * h {
        return Err(Error::Format(format!(
            "line {line}, column {col}: coordinate {got} does not match lattice value {want}"
        )));
    }
    Ok(())
}

pub fn read_field_file(grid: &GridSpec, path: &Path) -> Result<SampledField, Error> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    read_field(grid, std::io::BufReader::new(file))
}

/// Plain table: a header and rows of preformatted cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<table output>".into(),
            source: e,
        })?;
        Ok(())
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEF.to_string(), fmt_f64)
}
