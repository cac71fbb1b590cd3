//! File formats: MatrixMarket array files for dense matrices and vectors,
//! and binary PGM (P5) images for user-supplied phantoms.

use ndarray::{Array1, Array2};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Malformed(String),
}

/// Writes a dense matrix in MatrixMarket array format
/// (`%%MatrixMarket matrix array real general`). Entries are stored in
/// column-major order as the format requires, one per line, with
/// round-trip-exact float formatting.
pub fn write_matrix<P: AsRef<Path>>(path: P, m: &Array2<f64>) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for col in m.columns() {
        for &v in col.iter() {
            writeln!(w, "{v}")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a vector as an `n x 1` MatrixMarket array file.
pub fn write_vector<P: AsRef<Path>>(path: P, v: &Array1<f64>) -> Result<(), IoError> {
    let col = v.view().insert_axis(ndarray::Axis(1));
    write_matrix(path, &col.to_owned())
}

/// Reads a dense real MatrixMarket array file.
pub fn read_matrix<P: AsRef<Path>>(path: P) -> Result<Array2<f64>, IoError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();

    let header = lines
        .next()
        .ok_or_else(|| IoError::Malformed("empty file".into()))??;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_lowercase()).collect();
    if tokens.len() < 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "array"
        || tokens[3] != "real"
        || tokens[4] != "general"
    {
        return Err(IoError::Malformed(format!(
            "expected '%%MatrixMarket matrix array real general' header, got {header:?}"
        )));
    }

    let mut dims: Option<(usize, usize)> = None;
    let mut values: Vec<f64> = Vec::new();
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if dims.is_none() {
            let mut it = trimmed.split_whitespace();
            let rows: usize = parse_token(it.next(), "row count")?;
            let cols: usize = parse_token(it.next(), "column count")?;
            if rows == 0 || cols == 0 {
                return Err(IoError::Malformed("zero dimension".into()));
            }
            dims = Some((rows, cols));
            values.reserve(rows * cols);
            continue;
        }
        for tok in trimmed.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|e| IoError::Malformed(format!("bad entry {tok:?}: {e}")))?;
            values.push(v);
        }
    }

    let (rows, cols) = dims.ok_or_else(|| IoError::Malformed("missing size line".into()))?;
    if values.len() != rows * cols {
        return Err(IoError::Malformed(format!(
            "expected {} entries, found {}",
            rows * cols,
            values.len()
        )));
    }
    // Entries arrive column-major.
    let mut out = Array2::zeros((rows, cols));
    let mut it = values.into_iter();
    for c in 0..cols {
        for r in 0..rows {
            out[[r, c]] = it.next().unwrap();
        }
    }
    Ok(out)
}

/// Reads an `n x 1` (or `1 x n`) MatrixMarket array file as a vector.
pub fn read_vector<P: AsRef<Path>>(path: P) -> Result<Array1<f64>, IoError> {
    let m = read_matrix(path)?;
    if m.ncols() == 1 {
        Ok(m.column(0).to_owned())
    } else if m.nrows() == 1 {
        Ok(m.row(0).to_owned())
    } else {
        Err(IoError::Malformed(format!(
            "expected a vector, got a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )))
    }
}

fn parse_token<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T, IoError>
where
    T::Err: std::fmt::Display,
{
    let tok = tok.ok_or_else(|| IoError::Malformed(format!("missing {what}")))?;
    tok.parse()
        .map_err(|e| IoError::Malformed(format!("bad {what} {tok:?}: {e}")))
}

/// Reads a binary PGM (P5) image and scales it to `[0, 1]` by its maxval.
/// Supports 8- and 16-bit samples (16-bit is big-endian per the format).
pub fn read_pgm<P: AsRef<Path>>(path: P) -> Result<Array2<f64>, IoError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let mut pos = 0usize;

    let magic = pgm_token(&bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(IoError::Malformed(format!(
            "expected P5 magic, got {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let width: usize = pgm_number(&bytes, &mut pos, "width")?;
    let height: usize = pgm_number(&bytes, &mut pos, "height")?;
    let maxval: usize = pgm_number(&bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(IoError::Malformed(format!(
            "bad PGM dimensions {width}x{height}, maxval {maxval}"
        )));
    }
    // Exactly one whitespace byte separates the header from raster data.
    pos += 1;

    let two_byte = maxval > 255;
    let needed = width * height * if two_byte { 2 } else { 1 };
    if bytes.len() < pos + needed {
        return Err(IoError::Malformed(format!(
            "raster truncated: need {needed} bytes, have {}",
            bytes.len().saturating_sub(pos)
        )));
    }
    let scale = 1.0 / maxval as f64;
    let data = &bytes[pos..pos + needed];
    let img = Array2::from_shape_fn((height, width), |(r, c)| {
        let i = r * width + c;
        let raw = if two_byte {
            u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as f64
        } else {
            data[i] as f64
        };
        raw * scale
    });
    Ok(img)
}

fn pgm_token(bytes: &[u8], pos: &mut usize) -> Result<Vec<u8>, IoError> {
    // Skip whitespace and '#' comment lines.
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(IoError::Malformed("unexpected end of PGM header".into()));
    }
    Ok(bytes[start..*pos].to_vec())
}

fn pgm_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize, IoError> {
    let tok = pgm_token(bytes, pos)?;
    std::str::from_utf8(&tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| IoError::Malformed(format!("bad PGM {what}")))
}
