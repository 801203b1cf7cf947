//! Field persistence.
//!
//! Binary container: three little-endian 64-bit header words (`dim` and
//! `points_per_dim` as u64, `box_length` as f64) followed by interleaved
//! real/imaginary f64 samples in row-major order.
//!
//! CSV: one row per sample, `i[,j],re,im`, values printed with 17
//! significant digits.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::field::Field;
use crate::grid::Grid;

const HEADER_BYTES: usize = 24;

pub fn write_binary<W: Write>(field: &Field, mut out: W) -> Result<()> {
    let g = field.grid();
    out.write_all(&(g.dim() as u64).to_le_bytes())?;
    out.write_all(&(g.points_per_dim() as u64).to_le_bytes())?;
    out.write_all(&g.box_length().to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * g.len());
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn to_binary(field: &Field) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_BYTES + 16 * field.grid().len());
    write_binary(field, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

fn word(bytes: &[u8], at: usize) -> [u8; 8] {
    bytes[at..at + 8].try_into().expect("slice of length 8")
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Field> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    from_binary(&bytes)
}

pub fn from_binary(bytes: &[u8]) -> Result<Field> {
    if bytes.len() < HEADER_BYTES {
        return Err(LabError::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    let dim = u64::from_le_bytes(word(bytes, 0)) as usize;
    let n = u64::from_le_bytes(word(bytes, 8)) as usize;
    let box_length = f64::from_le_bytes(word(bytes, 16));
    let grid = Grid::new(dim, n, box_length).map_err(|e| LabError::Format(e.to_string()))?;
    let payload = &bytes[HEADER_BYTES..];
    if payload.len() != 16 * grid.len() {
        return Err(LabError::Format(format!(
            "payload has {} bytes, header implies {}",
            payload.len(),
            16 * grid.len()
        )));
    }
    let values = payload
        .chunks_exact(16)
        .map(|c| Complex64::new(f64::from_le_bytes(word(c, 0)), f64::from_le_bytes(word(c, 8))))
        .collect();
    Field::from_values(grid, values)
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn write_csv<W: Write>(field: &Field, mut out: W) -> Result<()> {
    let g = field.grid();
    if g.dim() == 1 {
        writeln!(out, "i,re,im")?;
    } else {
        writeln!(out, "i,j,re,im")?;
    }
    for (idx, v) in field.values().iter().enumerate() {
        let [i, j] = g.unflatten(idx);
        if g.dim() == 1 {
            writeln!(out, "{i},{},{}", fmt_f64(v.re), fmt_f64(v.im))?;
        } else {
            writeln!(out, "{i},{j},{},{}", fmt_f64(v.re), fmt_f64(v.im))?;
        }
    }
    Ok(())
}

/// Pretty JSON whose floats carry 17 significant digits.
struct PreciseFormatter<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

impl serde_json::ser::Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes `value` as indented JSON with every float at 17 significant
/// digits; non-finite floats become `null`.
pub fn write_json<T: serde::Serialize + ?Sized, W: Write>(value: &T, out: W) -> Result<()> {
    let formatter = PreciseFormatter {
        inner: serde_json::ser::PrettyFormatter::new(),
    };
    let mut ser = serde_json::Serializer::with_formatter(out, formatter);
    value.serialize(&mut ser)?;
    Ok(())
}

pub fn to_json_string<T: serde::Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    write_json(value, &mut buf)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}
