//! Shared text-record machinery: 17-significant-digit decimal formatting
//! (uniquely identifies an f64, so every round trip is bit-exact) and
//! line/matrix block readers used by the filter, nodes, and transcript
//! formats.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matcore::{C64, CMat};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Parse(format!("bad float '{s}'")))
}

pub(crate) struct LineReader<R> {
    inner: R,
    line_no: usize,
}

impl<R: BufRead> LineReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, line_no: 0 }
    }

    /// Next non-empty line, trimmed of the newline.
    pub fn next(&mut self) -> Result<String> {
        let mut s = String::new();
        loop {
            s.clear();
            self.line_no += 1;
            if self.inner.read_line(&mut s)? == 0 {
                return Err(Error::Parse(format!("line {}: unexpected EOF", self.line_no)));
            }
            let trimmed = s.trim_end_matches(['\n', '\r']);
            if !trimmed.is_empty() {
                return Ok(trimmed.to_string());
            }
        }
    }

    pub fn expect(&mut self, want: &str) -> Result<()> {
        let got = self.next()?;
        if got != want {
            return Err(self.err(format!("expected '{want}', got '{got}'")));
        }
        Ok(())
    }

    /// Value of a `key value` line.
    pub fn keyed(&mut self, key: &str) -> Result<String> {
        let line = self.next()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| self.err(format!("expected '{key} ...', got '{line}'")))
    }

    pub fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Parse(format!("line {}: {msg}", self.line_no))
    }
}

pub(crate) fn read_f64_row<R: BufRead>(r: &mut LineReader<R>, n: usize) -> Result<Vec<f64>> {
    let line = r.next()?;
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(parse_f64)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| r.err(e))?;
    if vals.len() != n {
        return Err(r.err(format!("expected {n} numbers, got {}", vals.len())));
    }
    Ok(vals)
}

pub(crate) fn write_real_block(w: &mut impl Write, m: &DMatrix<f64>) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub(crate) fn read_real_block<R: BufRead>(
    r: &mut LineReader<R>,
    rows: usize,
    cols: usize,
) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        let vals = read_f64_row(r, cols)?;
        for (j, v) in vals.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// Row-major complex block: `re im re im ...` per row.
pub(crate) fn write_cmat_block(w: &mut impl Write, m: &CMat) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{} {}", fmt_f64(m[(i, j)].re), fmt_f64(m[(i, j)].im)))
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub(crate) fn read_cmat_block<R: BufRead>(
    r: &mut LineReader<R>,
    rows: usize,
    cols: usize,
) -> Result<CMat> {
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        let vals = read_f64_row(r, 2 * cols)?;
        for j in 0..cols {
            m[(i, j)] = C64::new(vals[2 * j], vals[2 * j + 1]);
        }
    }
    Ok(m)
}
