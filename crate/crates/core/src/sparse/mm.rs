//! MatrixMarket coordinate format, the exchange format used for test
//! fixtures and optional basis dumps.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};

use super::{SparseMatrix, Symmetry};

pub fn write_matrix_market<W: Write>(mat: &SparseMatrix, out: &mut W) -> Result<()> {
    let kind = match mat.symmetry() {
        Symmetry::General => "general",
        Symmetry::SymmetricLowerStored => "symmetric",
    };
    writeln!(out, "%%MatrixMarket matrix coordinate real {kind}")?;
    writeln!(out, "{} {} {}", mat.nrows(), mat.ncols(), mat.nnz())?;
    for j in 0..mat.ncols() {
        let (rows, vals) = mat.col(j);
        for (&i, &v) in rows.iter().zip(vals) {
            writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}

pub fn read_matrix_market<R: Read>(input: R) -> Result<SparseMatrix> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines();

    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))??;
    let lower = header.to_ascii_lowercase();
    if !lower.starts_with("%%matrixmarket") {
        return Err(parse_err(1, "missing MatrixMarket header"));
    }
    if !lower.contains("matrix") || !lower.contains("coordinate") {
        return Err(parse_err(1, "only coordinate matrices are supported"));
    }
    if !(lower.contains("real") || lower.contains("integer")) {
        return Err(parse_err(1, "only real or integer fields are supported"));
    }
    let symmetry = if lower.contains(" symmetric") {
        Symmetry::SymmetricLowerStored
    } else if lower.contains(" general") {
        Symmetry::General
    } else {
        return Err(parse_err(1, "only general or symmetric matrices are supported"));
    };

    let mut line_no = 1usize;
    let mut sizes: Option<(usize, usize, usize)> = None;
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    for line in lines {
        let line = line?;
        line_no += 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match sizes {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(line_no, "size line needs `nrows ncols nnz`"));
                }
                let nr = parse_usize(fields[0], line_no)?;
                let nc = parse_usize(fields[1], line_no)?;
                let nz = parse_usize(fields[2], line_no)?;
                sizes = Some((nr, nc, nz));
                trips.reserve(nz);
            }
            Some((nr, nc, _)) => {
                if fields.len() != 3 {
                    return Err(parse_err(line_no, "entry needs `row col value`"));
                }
                let i = parse_usize(fields[0], line_no)?;
                let j = parse_usize(fields[1], line_no)?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|_| parse_err(line_no, "bad value"))?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(parse_err(line_no, "index out of bounds"));
                }
                if symmetry == Symmetry::SymmetricLowerStored && i < j {
                    return Err(parse_err(line_no, "symmetric file stores the lower triangle"));
                }
                trips.push((i - 1, j - 1, v));
            }
        }
    }
    let (nr, nc, nz) = sizes.ok_or_else(|| parse_err(line_no, "missing size line"))?;
    if trips.len() != nz {
        return Err(parse_err(
            line_no,
            "entry count does not match the size line",
        ));
    }
    SparseMatrix::from_triplets(nr, nc, &trips, symmetry)
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| parse_err(line, "bad integer"))
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}
