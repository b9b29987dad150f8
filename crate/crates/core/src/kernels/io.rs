//! Kernel matrix serialization.
//!
//! CSV: one header row of sample ids, then `m` rows of values in decimal
//! with 17 significant digits.
//!
//! Binary (little-endian):
//!
//! ```text
//! "GSEK" | version: u8 | m: u32 | m*m f64, row-major
//! ```

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::toolkit::fmt17;

pub const MAGIC: &[u8; 4] = b"GSEK";
pub const VERSION: u8 = 1;

pub fn write_csv<W: Write>(values: &DMatrix<f64>, ids: &[String], out: W) -> Result<()> {
    if ids.len() != values.nrows() {
        return Err(Error::DimensionMismatch { expected: values.nrows(), got: ids.len() });
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ids)?;
    for i in 0..values.nrows() {
        w.write_record((0..values.ncols()).map(|j| fmt17(values[(i, j)])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let ids: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let m = ids.len();
    let mut data = Vec::with_capacity(m * m);
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: rec.len() });
        }
        for cell in rec.iter() {
            data.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("kernel csv row {}: {cell:?}: {e}", row + 1)))?,
            );
        }
    }
    if data.len() != m * m {
        return Err(Error::DimensionMismatch { expected: m, got: data.len() / m.max(1) });
    }
    Ok((ids, DMatrix::from_row_slice(m, m, &data)))
}

pub fn write_binary<W: Write>(values: &DMatrix<f64>, mut out: W) -> Result<()> {
    let m = values.nrows();
    if values.ncols() != m {
        return Err(Error::invalid("binary kernel format stores square matrices only"));
    }
    let m32 = u32::try_from(m).map_err(|_| Error::invalid("kernel matrix too large"))?;
    out.write_all(MAGIC)?;
    out.write_all(&[VERSION])?;
    out.write_all(&m32.to_le_bytes())?;
    for i in 0..m {
        for j in 0..m {
            out.write_all(&values[(i, j)].to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<DMatrix<f64>> {
    let mut header = [0u8; 9];
    input.read_exact(&mut header)?;
    if &header[..4] != MAGIC {
        return Err(Error::invalid("not a GSEK kernel file"));
    }
    if header[4] != VERSION {
        return Err(Error::invalid(format!("unsupported GSEK version {}", header[4])));
    }
    let m = u32::from_le_bytes(header[5..9].try_into().expect("4 bytes")) as usize;
    let mut data = Vec::with_capacity(m * m);
    let mut buf = [0u8; 8];
    for _ in 0..m * m {
        input.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    Ok(DMatrix::from_row_slice(m, m, &data))
}
