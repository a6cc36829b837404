//! Binary frame/field files and their text metadata sidecars.
//!
//! Every file starts with a 16-byte header: a 4-byte ASCII magic, the row
//! count and column count as little-endian `u32`, and four reserved zero
//! bytes. The payload follows as row-major little-endian `f32` values.
//!
//! | magic  | contents                              |
//! |--------|---------------------------------------|
//! | `EFR1` | RF frame                              |
//! | `EDF1` | displacement: axial then lateral grid |
//! | `ESF1` | strain: `s_yy` then `s_xx` grid       |
//! | `EPF1` | effective Poisson's ratio grid        |
//!
//! Values are held as `f64` in memory and rounded to `f32` on write, so a
//! write/read cycle is the identity on `f32`-representable data.

use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::{DisplacementField, EprField, Geometry, NuBounds, RfFrame, StrainTensorField};

pub const HEADER_LEN: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileKind {
    Frame,
    Displacement,
    Strain,
    Epr,
}

impl FileKind {
    pub fn magic(self) -> &'static [u8; 4] {
        match self {
            FileKind::Frame => b"EFR1",
            FileKind::Displacement => b"EDF1",
            FileKind::Strain => b"ESF1",
            FileKind::Epr => b"EPF1",
        }
    }

    fn payloads(self) -> usize {
        match self {
            FileKind::Displacement | FileKind::Strain => 2,
            FileKind::Frame | FileKind::Epr => 1,
        }
    }

    pub fn from_magic(magic: &[u8]) -> Option<Self> {
        [FileKind::Frame, FileKind::Displacement, FileKind::Strain, FileKind::Epr]
            .into_iter()
            .find(|k| k.magic() == magic)
    }
}

fn write_grids<W: Write>(kind: FileKind, grids: &[&Array2<f64>], mut w: W) -> Result<()> {
    debug_assert_eq!(grids.len(), kind.payloads());
    let (rows, cols) = grids[0].dim();
    let rows32 = u32::try_from(rows).map_err(|_| Error::invariant("shape", "row count exceeds u32"))?;
    let cols32 = u32::try_from(cols).map_err(|_| Error::invariant("shape", "column count exceeds u32"))?;

    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * rows * cols * grids.len());
    buf.extend_from_slice(kind.magic());
    buf.extend_from_slice(&rows32.to_le_bytes());
    buf.extend_from_slice(&cols32.to_le_bytes());
    buf.extend_from_slice(&[0u8; 4]);
    for grid in grids {
        for &v in grid.iter() {
            let f = v as f32;
            if !f.is_finite() {
                return Err(Error::invariant("payload", format!("{v} is not representable as f32")));
            }
            buf.extend_from_slice(&f.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_header<R: Read>(r: &mut R) -> Result<(FileKind, usize, usize)> {
    let mut header = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        let k = r.read(&mut header[got..])?;
        if k == 0 {
            return Err(Error::format(got as u64, "truncated header"));
        }
        got += k;
    }
    let kind = FileKind::from_magic(&header[0..4])
        .ok_or_else(|| Error::format(0, format!("bad magic {:?}", String::from_utf8_lossy(&header[0..4]))))?;
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::format(4, format!("degenerate shape {rows}x{cols}")));
    }
    if header[12..16] != [0u8; 4] {
        return Err(Error::format(12, "reserved header bytes are not zero"));
    }
    Ok((kind, rows, cols))
}

fn read_payloads<R: Read>(r: &mut R, kind: FileKind, rows: usize, cols: usize) -> Result<Vec<Array2<f64>>> {
    let per_grid = rows * cols;
    let expected = (4 * per_grid * kind.payloads()) as u64;
    let mut bytes = Vec::new();
    r.take(expected).read_to_end(&mut bytes)?;
    if (bytes.len() as u64) < expected {
        return Err(Error::format(
            (HEADER_LEN + bytes.len()) as u64,
            format!("truncated payload: expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let mut grids = Vec::with_capacity(kind.payloads());
    for g in 0..kind.payloads() {
        let mut values = Vec::with_capacity(per_grid);
        for k in 0..per_grid {
            let start = 4 * (g * per_grid + k);
            let v = f32::from_le_bytes(bytes[start..start + 4].try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::format((HEADER_LEN + start) as u64, format!("non-finite value {v}")));
            }
            values.push(v as f64);
        }
        grids.push(Array2::from_shape_vec((rows, cols), values).expect("payload length checked"));
    }
    Ok(grids)
}

fn read_expecting<R: Read>(mut r: R, want: FileKind) -> Result<Vec<Array2<f64>>> {
    let (kind, rows, cols) = read_header(&mut r)?;
    if kind != want {
        return Err(Error::format(
            0,
            format!(
                "expected {} file, found {}",
                String::from_utf8_lossy(want.magic()),
                String::from_utf8_lossy(kind.magic())
            ),
        ));
    }
    read_payloads(&mut r, kind, rows, cols)
}

pub fn write_frame<W: Write>(frame: &RfFrame, w: W) -> Result<()> {
    write_grids(FileKind::Frame, &[frame.samples()], w)
}

/// Reads an `EFR1` frame. The binary file carries no geometry; the frame
/// gets [`Geometry::default`] until the sidecar is applied with
/// [`RfFrame::with_geometry`].
pub fn read_frame<R: Read>(r: R) -> Result<RfFrame> {
    let mut grids = read_expecting(r, FileKind::Frame)?;
    RfFrame::new(grids.remove(0), Geometry::default())
}

pub fn write_displacement<W: Write>(field: &DisplacementField, w: W) -> Result<()> {
    write_grids(FileKind::Displacement, &[field.axial(), field.lateral()], w)
}

pub fn read_displacement<R: Read>(r: R) -> Result<DisplacementField> {
    let mut grids = read_expecting(r, FileKind::Displacement)?;
    let lateral = grids.pop().unwrap();
    let axial = grids.pop().unwrap();
    DisplacementField::new(axial, lateral)
}

pub fn write_strain<W: Write>(field: &StrainTensorField, w: W) -> Result<()> {
    write_grids(FileKind::Strain, &[field.s_yy(), field.s_xx()], w)
}

pub fn read_strain<R: Read>(r: R) -> Result<StrainTensorField> {
    let mut grids = read_expecting(r, FileKind::Strain)?;
    let s_xx = grids.pop().unwrap();
    let s_yy = grids.pop().unwrap();
    StrainTensorField::new(s_yy, s_xx)
}

pub fn write_epr<W: Write>(field: &EprField, w: W) -> Result<()> {
    write_grids(FileKind::Epr, &[field.nu()], w)
}

/// Reads an `EPF1` file; with `bounds` set, out-of-range values are
/// rejected.
pub fn read_epr<R: Read>(r: R, bounds: Option<NuBounds>) -> Result<EprField> {
    let mut grids = read_expecting(r, FileKind::Epr)?;
    let nu = grids.remove(0);
    match bounds {
        Some(b) => EprField::with_bounds(nu, b),
        None => EprField::new(nu),
    }
}

/// Any of the four file kinds, as decoded by [`read_any`].
#[derive(Clone, Debug, PartialEq)]
pub enum AnyField {
    Frame(RfFrame),
    Displacement(DisplacementField),
    Strain(StrainTensorField),
    Epr(EprField),
}

impl AnyField {
    /// Named scalar grids contained in the file.
    pub fn components(&self) -> Vec<(&'static str, &Array2<f64>)> {
        match self {
            AnyField::Frame(f) => vec![("rf", f.samples())],
            AnyField::Displacement(d) => vec![("axial_displacement", d.axial()), ("lateral_displacement", d.lateral())],
            AnyField::Strain(s) => vec![("axial_strain", s.s_yy()), ("lateral_strain", s.s_xx())],
            AnyField::Epr(e) => vec![("epr", e.nu())],
        }
    }
}

/// Reads whichever kind of file the magic announces.
pub fn read_any<R: Read>(mut r: R) -> Result<AnyField> {
    let (kind, rows, cols) = read_header(&mut r)?;
    let mut grids = read_payloads(&mut r, kind, rows, cols)?;
    Ok(match kind {
        FileKind::Frame => AnyField::Frame(RfFrame::new(grids.remove(0), Geometry::default())?),
        FileKind::Displacement => {
            let lateral = grids.pop().unwrap();
            AnyField::Displacement(DisplacementField::new(grids.pop().unwrap(), lateral)?)
        }
        FileKind::Strain => {
            let s_xx = grids.pop().unwrap();
            AnyField::Strain(StrainTensorField::new(grids.pop().unwrap(), s_xx)?)
        }
        FileKind::Epr => AnyField::Epr(EprField::new(grids.remove(0))?),
    })
}

/// Writes the `key = value` metadata sidecar for a frame.
pub fn write_metadata<W: Write>(geometry: &Geometry, mut w: W) -> Result<()> {
    writeln!(w, "axial_spacing_mm = {:?}", geometry.axial_spacing_mm)?;
    writeln!(w, "lateral_pitch_mm = {:?}", geometry.lateral_pitch_mm)?;
    writeln!(w, "center_frequency_mhz = {:?}", geometry.center_frequency_mhz)?;
    writeln!(w, "sampling_frequency_mhz = {:?}", geometry.sampling_frequency_mhz)?;
    Ok(())
}

pub fn read_metadata<R: Read>(mut r: R) -> Result<Geometry> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let geometry: Geometry = toml::from_str(&text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start].matches('\n').count() as u64 + 1)
            .unwrap_or(0);
        Error::format(line, e.message().to_string())
    })?;
    geometry.validate()?;
    Ok(geometry)
}
