//! Binary field snapshots.
//!
//! Layout (little endian): magic `FNLS`, `u32` version, `u32` d, `u32` n, `f64` half length,
//! `f64` s, `f64` alpha, then `(re, im)` pairs in row-major order.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{FnlsError, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::params::PhysicsParams;

const MAGIC: &[u8; 4] = b"FNLS";
const VERSION: u32 = 1;

pub fn write_snapshot(mut w: impl Write, field: &Field, params: &PhysicsParams) -> Result<()> {
    let g = field.grid();
    let mut buf = Vec::with_capacity(40 + 16 * g.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.points_per_dim() as u32).to_le_bytes());
    for v in [g.half_length(), params.s, params.alpha] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for c in field.values() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a snapshot; returns the field and the `(s, alpha)` it was written with.
pub fn read_snapshot(mut r: impl Read) -> Result<(Field, f64, f64)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let mut take = |k: usize| -> Result<&[u8]> {
        let out = bytes
            .get(pos..pos + k)
            .ok_or_else(|| FnlsError::Format("snapshot truncated".into()))?;
        pos += k;
        Ok(out)
    };
    if take(4)? != MAGIC {
        return Err(FnlsError::Format("bad snapshot magic".into()));
    }
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes"));
    let f64_at = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8 bytes"));
    let version = u32_at(take(4)?);
    if version != VERSION {
        return Err(FnlsError::Format(format!("unsupported snapshot version {version}")));
    }
    let dim = u32_at(take(4)?) as usize;
    let n = u32_at(take(4)?) as usize;
    let half_length = f64_at(take(8)?);
    let s = f64_at(take(8)?);
    let alpha = f64_at(take(8)?);
    let grid = Grid::new(dim, n, half_length)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = f64_at(take(8)?);
        let im = f64_at(take(8)?);
        values.push(Complex64::new(re, im));
    }
    if pos != bytes.len() {
        return Err(FnlsError::Format("trailing bytes after snapshot".into()));
    }
    Ok((Field::new(Arc::clone(&grid), values)?, s, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let g = Grid::new(2, 16, 5.0).unwrap();
        let p = PhysicsParams::new(2, 0.75, 2.0).unwrap();
        let f = Field::from_fn(g, |x| Complex64::new(x[0].sin(), x[1] * 0.1));
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, &p).unwrap();
        assert_eq!(buf.len(), 40 + 16 * 256);
        let (back, s, alpha) = read_snapshot(&buf[..]).unwrap();
        assert_eq!((s, alpha), (0.75, 2.0));
        assert_eq!(back.values(), f.values());
        assert_eq!(back.grid().half_length(), 5.0);
    }

    #[test]
    fn rejects_corruption() {
        let g = Grid::new(1, 16, 5.0).unwrap();
        let p = PhysicsParams::new(1, 0.7, 2.8).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &Field::zeros(g), &p).unwrap();
        assert!(read_snapshot(&buf[..buf.len() - 1]).is_err());
        buf[0] = b'X';
        assert!(read_snapshot(&buf[..]).is_err());
    }
}
