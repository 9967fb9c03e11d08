//! Binary container for named `f64` matrices.
//!
//! Layout (little endian): magic `TRGN`, version byte, `u32` array count,
//! then per array a `u16` name length, UTF-8 name, `u32` rows, `u32` cols and
//! `rows * cols` values in row-major order.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::AutodiffError;

pub const MAGIC: &[u8; 4] = b"TRGN";
pub const VERSION: u8 = 1;

fn io_err(e: std::io::Error) -> AutodiffError {
    AutodiffError::Checkpoint(e.to_string())
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    arrays: &[(&str, &DMatrix<f64>)],
) -> Result<(), AutodiffError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    let count = u32::try_from(arrays.len())
        .map_err(|_| AutodiffError::Checkpoint("too many arrays".into()))?;
    buf.extend_from_slice(&count.to_le_bytes());
    for (name, m) in arrays {
        let len = u16::try_from(name.len())
            .map_err(|_| AutodiffError::Checkpoint(format!("name too long: {name}")))?;
        buf.extend_from_slice(&len.to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        for dim in [m.nrows(), m.ncols()] {
            let d = u32::try_from(dim)
                .map_err(|_| AutodiffError::Checkpoint(format!("{name}: dimension too large")))?;
            buf.extend_from_slice(&d.to_le_bytes());
        }
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                buf.extend_from_slice(&m[(r, c)].to_le_bytes());
            }
        }
    }
    w.write_all(&buf).map_err(io_err)
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Vec<(String, DMatrix<f64>)>, AutodiffError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io_err)?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if cur.take(4)? != MAGIC {
        return Err(AutodiffError::Checkpoint("bad magic".into()));
    }
    let version = cur.take(1)?[0];
    if version != VERSION {
        return Err(AutodiffError::Checkpoint(format!(
            "unsupported version {version}"
        )));
    }
    let count = cur.u32()? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let len = u16::from_le_bytes(cur.take(2)?.try_into().expect("2 bytes")) as usize;
        let name = String::from_utf8(cur.take(len)?.to_vec())
            .map_err(|e| AutodiffError::Checkpoint(e.to_string()))?;
        let rows = cur.u32()? as usize;
        let cols = cur.u32()? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(f64::from_le_bytes(
                cur.take(8)?.try_into().expect("8 bytes"),
            ));
        }
        out.push((name, DMatrix::from_row_slice(rows, cols, &data)));
    }
    if cur.pos != bytes.len() {
        return Err(AutodiffError::Checkpoint("trailing bytes".into()));
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], AutodiffError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| AutodiffError::Checkpoint("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, AutodiffError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
}
