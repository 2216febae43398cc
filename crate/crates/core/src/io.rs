//! Raw file formats shared by the library and the CLI.
//!
//! Arrays: 16-byte header (magic `ROII`, u32 rows, u32 cols, u32 reserved,
//! all little-endian) followed by `rows * cols` little-endian f64 values in
//! row-major order.
//!
//! Sparse matrices: 8-byte magic `ROISMTX\0`, u64 nnz, then nnz triplets of
//! (u64 row, u64 col, f64 weight), little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::projector::SystemMatrix;

const ARRAY_MAGIC: &[u8; 4] = b"ROII";
const MATRIX_MAGIC: &[u8; 8] = b"ROISMTX\0";

/// Write a 2D array in the raw `ROII` format.
pub fn write_array(path: impl AsRef<Path>, array: &Array2<f64>) -> Result<()> {
    let (rows, cols) = array.dim();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(ARRAY_MAGIC)?;
    w.write_all(&(rows as u32).to_le_bytes())?;
    w.write_all(&(cols as u32).to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for i in 0..rows {
        for j in 0..cols {
            w.write_all(&array[(i, j)].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a 2D array in the raw `ROII` format.
pub fn read_array(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != ARRAY_MAGIC {
        return Err(Error::Format("bad magic, expected ROII".into()));
    }
    let rows = read_u32(&mut r)? as usize;
    let cols = read_u32(&mut r)? as usize;
    let _reserved = read_u32(&mut r)?;
    let mut data = vec![0.0f64; rows.checked_mul(cols).ok_or_else(|| {
        Error::Format(format!("array dimensions {rows}x{cols} overflow"))
    })?];
    let mut buf = [0u8; 8];
    for v in data.iter_mut() {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| Error::Format(format!("shape error: {e}")))
}

/// Dump the system matrix as (row, col, weight) triplets.
pub fn write_system_matrix(path: impl AsRef<Path>, w: &SystemMatrix) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MATRIX_MAGIC)?;
    out.write_all(&(w.nnz() as u64).to_le_bytes())?;
    for (row, col, val) in w.triplets() {
        out.write_all(&(row as u64).to_le_bytes())?;
        out.write_all(&(col as u64).to_le_bytes())?;
        out.write_all(&val.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Read back a triplet dump as (rows, cols, triplets).
pub fn read_system_matrix_triplets(
    path: impl AsRef<Path>,
) -> Result<Vec<(usize, usize, f64)>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::Format("bad magic, expected ROISMTX".into()));
    }
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let nnz = u64::from_le_bytes(buf8) as usize;
    let mut triplets = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        r.read_exact(&mut buf8)?;
        let row = u64::from_le_bytes(buf8) as usize;
        r.read_exact(&mut buf8)?;
        let col = u64::from_le_bytes(buf8) as usize;
        r.read_exact(&mut buf8)?;
        let val = f64::from_le_bytes(buf8);
        triplets.push((row, col, val));
    }
    Ok(triplets)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
