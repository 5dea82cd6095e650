//! Matrix Market (coordinate, real, general) and plain-text vector I/O.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{CsrMatrix, DenseVector, Matrix};
use crate::error::{Error, Result};

const MM_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn read_matrix_market(path: &Path) -> Result<CsrMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
        other => other,
    })
}

pub(crate) fn parse_matrix_market(text: &str) -> Result<CsrMatrix> {
    let ctx = "matrix market";
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let fields: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if fields != ["%%matrixmarket", "matrix", "coordinate", "real", "general"] {
        return Err(Error::parse(
            ctx,
            format!("expected header `{MM_HEADER}`, found `{header}`"),
        ));
    }
    let mut body = lines
        .enumerate()
        .map(|(i, l)| (i + 2, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));

    let (lineno, size) = body
        .next()
        .ok_or_else(|| Error::parse(ctx, "missing size line"))?;
    let dims = parse_fields::<usize>(size, 3, lineno)?;
    let (nrows, ncols, nnz) = (dims[0], dims[1], dims[2]);

    let mut triplets = Vec::with_capacity(nnz);
    for (lineno, line) in body {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::parse(
                ctx,
                format!("line {lineno}: expected `row col value`"),
            ));
        }
        let r: usize = parse_one(parts[0], lineno)?;
        let c: usize = parse_one(parts[1], lineno)?;
        let v: f64 = parse_one(parts[2], lineno)?;
        if r == 0 || c == 0 || r > nrows || c > ncols {
            return Err(Error::parse(
                ctx,
                format!("line {lineno}: index ({r}, {c}) outside {nrows}x{ncols} (1-based)"),
            ));
        }
        if !v.is_finite() {
            return Err(Error::parse(
                ctx,
                format!("line {lineno}: non-finite value"),
            ));
        }
        triplets.push((r - 1, c - 1, v));
    }
    if triplets.len() != nnz {
        return Err(Error::parse(
            ctx,
            format!("size line declares {nnz} entries, found {}", triplets.len()),
        ));
    }
    CsrMatrix::from_triplets(nrows, ncols, triplets)
}

fn parse_one<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse("matrix market", format!("line {lineno}: bad number `{s}`")))
}

fn parse_fields<T: std::str::FromStr>(line: &str, count: usize, lineno: usize) -> Result<Vec<T>> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != count {
        return Err(Error::parse(
            "matrix market",
            format!("line {lineno}: expected {count} fields"),
        ));
    }
    parts.into_iter().map(|p| parse_one(p, lineno)).collect()
}

/// Writes the stored entries of `a` with 1-based indices. Values use the
/// shortest representation that round-trips.
pub fn write_matrix_market(path: &Path, a: &Matrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "{MM_HEADER}")?;
        match a {
            Matrix::Dense(d) => {
                let nnz = d.as_slice().iter().filter(|v| **v != 0.0).count();
                writeln!(w, "{} {} {}", d.nrows(), d.ncols(), nnz)?;
                for i in 0..d.nrows() {
                    for (j, v) in d.row(i).iter().enumerate() {
                        if *v != 0.0 {
                            writeln!(w, "{} {} {:?}", i + 1, j + 1, v)?;
                        }
                    }
                }
            }
            Matrix::Sparse(s) => {
                writeln!(w, "{} {} {}", s.nrows(), s.ncols(), s.nnz())?;
                for (r, c, v) in s.triplets() {
                    writeln!(w, "{} {} {:?}", r + 1, c + 1, v)?;
                }
            }
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

pub fn read_vector(path: &Path) -> Result<DenseVector> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_vector(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
        other => other,
    })
}

/// One real per line; blank lines and `#`/`%` comments are skipped.
pub(crate) fn parse_vector(text: &str) -> Result<DenseVector> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::parse("vector", format!("line {}: bad number `{line}`", i + 1)))?;
        values.push(v);
    }
    DenseVector::new(values)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        for x in v {
            writeln!(w, "{x:?}")?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}
