//! Comma-separated dataset files with a `Y,A,X1..Xp` header.
//!
//! Values are written in Rust's shortest round-trip form, so a dataset read
//! back is bit-identical to the one written.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::Dataset;

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_dataset<W: Write>(d: &Dataset, mut w: W) -> std::io::Result<()> {
    let mut header = String::from("Y,A");
    for j in 1..=d.p() {
        header.push_str(&format!(",X{j}"));
    }
    writeln!(w, "{header}")?;
    let x = d.x();
    for i in 0..d.n() {
        write!(w, "{},{}", d.outcome()[i], d.treatment()[i])?;
        for j in 0..d.p() {
            write!(w, ",{}", x[(i, j)])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_dataset(d: &Dataset, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    write_dataset(d, &mut w).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Parses a dataset. Columns are located by header name; `X` columns must be
/// numbered `X1..Xp` (in any order) and at least one must be present.
pub fn read_dataset<R: Read>(r: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr
        .headers()
        .map_err(|e| Error::InvalidData(format!("header: {e}")))?
        .clone();
    let find = |name: &str| header.iter().position(|h| h == name);
    let y_col = find("Y").ok_or_else(|| Error::InvalidData("missing column Y".into()))?;
    let a_col = find("A").ok_or_else(|| Error::InvalidData("missing column A".into()))?;
    let mut x_cols = Vec::new();
    for (k, h) in header.iter().enumerate() {
        if k == y_col || k == a_col {
            continue;
        }
        let idx = h
            .strip_prefix('X')
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&j| j >= 1)
            .ok_or_else(|| Error::InvalidData(format!("unexpected column {h:?}")))?;
        x_cols.push((idx, k));
    }
    x_cols.sort_unstable();
    if x_cols.is_empty() {
        return Err(Error::InvalidData("no covariate columns (p = 0)".into()));
    }
    for (want, &(got, _)) in (1..).zip(&x_cols) {
        if want != got {
            return Err(Error::InvalidData(format!("covariate columns must be X1..X{}", x_cols.len())));
        }
    }

    let p = x_cols.len();
    let (mut ys, mut as_, mut xs) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::InvalidData(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let cell = |k: usize| -> Result<f64> {
            let raw = rec.get(k).unwrap_or("");
            raw.parse::<f64>()
                .map_err(|_| Error::InvalidData(format!("line {line}: non-numeric value {raw:?} in column {}", &header[k])))
        };
        ys.push(cell(y_col)?);
        let a = cell(a_col)?;
        if a != 0.0 && a != 1.0 {
            return Err(Error::InvalidData(format!("line {line}: treatment must be 0 or 1, got {a}")));
        }
        as_.push(a);
        for &(_, k) in &x_cols {
            xs.push(cell(k)?);
        }
    }
    let n = ys.len();
    Dataset::new(
        DMatrix::from_row_slice(n, p, &xs),
        DVector::from_vec(as_),
        DVector::from_vec(ys),
    )
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    read_dataset(f)
}
