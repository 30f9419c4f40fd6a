//! Field persistence.
//!
//! Binary layout (little-endian): the magic bytes `CGADFLD1`, the dimension as
//! `u32`, the node count per axis as `u32`, the bounds per axis as `f64`
//! pairs, then the values in row-major order as `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::{Axis, Grid, GridField};

pub const MAGIC: &[u8; 8] = b"CGADFLD1";

pub fn write_field<W: Write>(mut w: W, field: &GridField) -> Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for axis in grid.axes() {
        w.write_all(&(axis.n as u32).to_le_bytes())?;
    }
    for axis in grid.axes() {
        w.write_all(&axis.lower.to_le_bytes())?;
        w.write_all(&axis.upper.to_le_bytes())?;
    }
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_field<R: Read>(mut r: R) -> Result<GridField> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a CGADFLD1 field file".into()));
    }
    let dim = read_u32(&mut r)? as usize;
    if !(1..=2).contains(&dim) {
        return Err(Error::Format(format!("unsupported dimension {dim}")));
    }
    let counts = (0..dim).map(|_| read_u32(&mut r).map(|n| n as usize)).collect::<Result<Vec<_>>>()?;
    let mut axes = Vec::with_capacity(dim);
    for n in counts {
        let lower = read_f64(&mut r)?;
        let upper = read_f64(&mut r)?;
        axes.push(Axis::new(lower, upper, n)?);
    }
    let grid = Grid::new(axes)?;
    let values = (0..grid.len()).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes", rest.len())));
    }
    GridField::new(grid, values)
}

pub fn save_field(path: &Path, field: &GridField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<GridField> {
    read_field(BufReader::new(File::open(path)?))
}

/// `x,value` rows for a 1D field, with a header line.
pub fn write_csv_1d<W: Write>(mut w: W, field: &GridField) -> Result<()> {
    let grid = field.grid();
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("CSV output is only defined for 1D fields".into()));
    }
    writeln!(w, "x,value")?;
    for (x, v) in grid.axes()[0].points().iter().zip(field.values()) {
        writeln!(w, "{x:.17e},{v:.17e}")?;
    }
    Ok(())
}
