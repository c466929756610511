//! File formats: ScalarField JSON, 16-bit PGM rasters and plain CSV tables.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;

#[derive(Debug, Serialize, Deserialize)]
struct FieldFile {
    dim: usize,
    units: Vec<usize>,
    points_per_unit: usize,
    values: Vec<f64>,
}

pub fn field_to_json(field: &ScalarField) -> Result<String> {
    let grid = field.grid();
    let file = FieldFile {
        dim: grid.dim(),
        units: grid.units().to_vec(),
        points_per_unit: grid.points_per_unit(),
        values: field.values().to_vec(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn field_from_json(text: &str) -> Result<ScalarField> {
    let file: FieldFile = serde_json::from_str(text)?;
    let grid = Grid::new(file.dim, &file.units, file.points_per_unit)?;
    ScalarField::new(grid, file.values)
}

pub fn write_field_json(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    fs::write(path, field_to_json(field)? + "\n")?;
    Ok(())
}

pub fn read_field_json(path: impl AsRef<Path>) -> Result<ScalarField> {
    field_from_json(&fs::read_to_string(path)?)
}

/// Binary 16-bit PGM of a 2D field: axis 0 runs down the rows, axis 1 across
/// the columns. Values are mapped affinely from `[min, max]` onto `[0, 65535]`
/// and the bounds are recorded in the comment line.
pub fn pgm_bytes(field: &ScalarField) -> Result<Vec<u8>> {
    let grid = field.grid();
    if grid.dim() != 2 {
        return Err(Error::Format("PGM export needs a 2D field".into()));
    }
    let (rows, cols) = (grid.shape()[0], grid.shape()[1]);
    let (min, max) = (field.min(), field.max());
    let scale = if max > min { 65535.0 / (max - min) } else { 0.0 };
    let mut out = format!("P5\n# min={min:e} max={max:e}\n{cols} {rows}\n65535\n").into_bytes();
    out.reserve(2 * field.len());
    for &v in field.values() {
        let s = ((v - min) * scale).round().clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&s.to_be_bytes());
    }
    Ok(out)
}

pub fn write_pgm(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    fs::write(path, pgm_bytes(field)?)?;
    Ok(())
}

/// Decoded PGM raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub min: f64,
    pub max: f64,
    pub samples: Vec<u16>,
}

impl Pgm {
    /// Approximate field values recovered from the stored bounds.
    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / 65535.0;
        self.samples.iter().map(|&s| self.min + s as f64 * step).collect()
    }
}

/// Parse the exact layout written by [`pgm_bytes`].
pub fn parse_pgm(bytes: &[u8]) -> Result<Pgm> {
    let bad = |msg: &str| Error::Format(format!("PGM: {msg}"));
    let mut lines = Vec::new();
    let mut start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'\n' {
            lines.push(std::str::from_utf8(&bytes[start..i]).map_err(|_| bad("header is not text"))?);
            start = i + 1;
            if lines.len() == 4 {
                break;
            }
        }
    }
    if lines.len() < 4 || lines[0] != "P5" {
        return Err(bad("missing P5 header"));
    }
    let bound = |key: &str| -> Result<f64> {
        lines[1]
            .split_whitespace()
            .find_map(|t| t.strip_prefix(key))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing rescale bounds"))
    };
    let (min, max) = (bound("min=")?, bound("max=")?);
    let dims: Vec<usize> = lines[2]
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad("bad dimensions")))
        .collect::<Result<_>>()?;
    if dims.len() != 2 || lines[3] != "65535" {
        return Err(bad("unsupported header"));
    }
    let (width, height) = (dims[0], dims[1]);
    let body = &bytes[start..];
    if body.len() != 2 * width * height {
        return Err(bad("pixel data has the wrong length"));
    }
    let samples = body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
    Ok(Pgm {
        width,
        height,
        min,
        max,
        samples,
    })
}

/// Twelve significant digits in scientific notation.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.11e}")
}

/// A CSV table with a one-line header. Cells never need quoting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}
