//! Matrix Market coordinate files (real symmetric, lower triangle on disk)
//! and plain-text vectors with one value per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Csr, SparseSpd};
use crate::error::{Error, Result};

const HEADER: &str = "%%MatrixMarket matrix coordinate real symmetric";

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseSpd> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(BufReader::new(file))
}

pub fn parse_matrix_market(reader: impl BufRead) -> Result<SparseSpd> {
    let mut lines = reader.lines().enumerate();
    let bad = |line: usize, msg: &str| Error::MatrixMarket(format!("line {}: {msg}", line + 1));

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::MatrixMarket("empty file".into()))?;
    let header = header.map_err(|e| Error::MatrixMarket(e.to_string()))?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(bad(0, "missing %%MatrixMarket matrix header"));
    }
    if tokens[2] != "coordinate" {
        return Err(bad(0, "only coordinate format is supported"));
    }
    if tokens[3] != "real" && tokens[3] != "integer" && tokens[3] != "double" {
        return Err(bad(0, &format!("unsupported field '{}'", tokens[3])));
    }
    if tokens[4] != "symmetric" {
        return Err(bad(0, &format!("unsupported symmetry '{}', expected symmetric", tokens[4])));
    }

    let mut size: Option<(usize, usize)> = None;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (lineno, line) in lines {
        let line = line.map_err(|e| Error::MatrixMarket(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(bad(lineno, "size line must have three fields"));
                }
                let nums: Vec<usize> = fields
                    .iter()
                    .map(|f| f.parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad(lineno, "malformed size line"))?;
                if nums[0] != nums[1] {
                    return Err(bad(lineno, "matrix is not square"));
                }
                size = Some((nums[0], nums[2]));
                entries.reserve(2 * nums[2]);
            }
            Some((n, _)) => {
                if fields.len() != 3 {
                    return Err(bad(lineno, "entry must have three fields"));
                }
                let i: usize = fields[0].parse().map_err(|_| bad(lineno, "bad row index"))?;
                let j: usize = fields[1].parse().map_err(|_| bad(lineno, "bad column index"))?;
                let v: f64 = fields[2].parse().map_err(|_| bad(lineno, "bad value"))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(bad(lineno, &format!("index ({i}, {j}) out of range 1..={n}")));
                }
                entries.push((i - 1, j - 1, v));
                if i != j {
                    entries.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (n, declared) = size.ok_or_else(|| Error::MatrixMarket("missing size line".into()))?;
    let stored = entries.iter().filter(|(i, j, _)| i >= j).count();
    if stored != declared {
        return Err(Error::MatrixMarket(format!(
            "declared {declared} entries, found {stored}"
        )));
    }
    SparseSpd::from_csr(Csr::from_triplets(n, entries)?)
}

/// Writes the lower triangle with shortest round-trip decimal values.
pub fn write_matrix_market(a: &SparseSpd, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    format_matrix_market(a, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn format_matrix_market(a: &SparseSpd, w: &mut impl Write) -> std::io::Result<()> {
    let lower = a.lower_triangle();
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), lower.nnz())?;
    for (i, j, v) in lower.iter() {
        writeln!(w, "{} {} {:?}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            Error::MatrixMarket(format!("{}: line {}: bad value", path.display(), lineno + 1))
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_vector(values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for v in values {
        writeln!(w, "{v:?}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
