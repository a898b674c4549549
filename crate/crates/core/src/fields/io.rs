use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{BoundaryTrace, Grid, ScalarField, VectorField};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"AORF";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum FieldKind {
    Scalar = 0,
    Vector = 1,
    Trace = 2,
}

/// Any field that can be written to the binary format.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredField {
    Scalar(ScalarField),
    Vector(VectorField),
    Trace(BoundaryTrace),
}

impl StoredField {
    pub fn kind(&self) -> FieldKind {
        match self {
            StoredField::Scalar(_) => FieldKind::Scalar,
            StoredField::Vector(_) => FieldKind::Vector,
            StoredField::Trace(_) => FieldKind::Trace,
        }
    }

    pub fn grid(&self) -> Grid {
        match self {
            StoredField::Scalar(f) => f.grid(),
            StoredField::Vector(f) => f.grid(),
            StoredField::Trace(f) => f.grid(),
        }
    }
}

pub fn write_field<W: Write>(mut w: W, field: &StoredField) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u16::<LittleEndian>(FORMAT_VERSION)?;
    w.write_u8(field.kind() as u8)?;
    w.write_u32::<LittleEndian>(field.grid().n() as u32)?;
    match field {
        StoredField::Scalar(f) => {
            for &v in f.values() {
                w.write_f64::<LittleEndian>(v)?;
            }
        }
        StoredField::Vector(f) => {
            for (&a, &b) in f.x().iter().zip(f.y()) {
                w.write_f64::<LittleEndian>(a)?;
                w.write_f64::<LittleEndian>(b)?;
            }
        }
        StoredField::Trace(f) => {
            for &v in f.values() {
                w.write_f64::<LittleEndian>(v)?;
            }
        }
    }
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<StoredField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, expected AORF".into()));
    }
    let version = r.read_u16::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let kind = r.read_u8()?;
    let n = r.read_u32::<LittleEndian>()? as usize;
    let grid = Grid::new(n).map_err(|e| Error::Format(e.to_string()))?;
    let count = match kind {
        0 => grid.len(),
        1 => 2 * grid.len(),
        2 => grid.boundary_len(),
        k => return Err(Error::Format(format!("unknown field kind {k}"))),
    };
    let mut data = vec![0.0; count];
    r.read_f64_into::<LittleEndian>(&mut data)
        .map_err(|_| Error::Format(format!("expected {count} values")))?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    let fmt = |e: Error| Error::Format(e.to_string());
    Ok(match kind {
        0 => StoredField::Scalar(ScalarField::new(grid, data).map_err(fmt)?),
        1 => {
            let x = data.iter().step_by(2).copied().collect();
            let y = data.iter().skip(1).step_by(2).copied().collect();
            StoredField::Vector(VectorField::new(grid, x, y).map_err(fmt)?)
        }
        _ => StoredField::Trace(BoundaryTrace::new(grid, data).map_err(fmt)?),
    })
}

pub fn save(path: &std::path::Path, field: &StoredField) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_field(std::io::BufWriter::new(f), field)
}

pub fn load(path: &std::path::Path) -> Result<StoredField> {
    let f = std::fs::File::open(path)?;
    read_field(std::io::BufReader::new(f))
}

pub fn load_scalar(path: &std::path::Path) -> Result<ScalarField> {
    match load(path)? {
        StoredField::Scalar(f) => Ok(f),
        other => Err(Error::Format(format!(
            "{}: expected a scalar field, found {:?}",
            path.display(),
            other.kind()
        ))),
    }
}
