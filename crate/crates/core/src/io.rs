//! Plain-text immersion files.
//!
//! ```text
//! # comments and blank lines are ignored
//! shape=grid dim=4 rows=9 cols=9 periodic=0,0
//! 1.5707963267948966e0,0e0,0e0,0e0
//! ...
//! ```
//!
//! The header is the first non-comment line; `rows`, `cols` and `periodic` are
//! only allowed for grids. Each following line holds one sample with exactly
//! `dim` finite coordinates, in row-major order for grids.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;

use crate::ambient::AmbientChart;
use crate::error::{Error, Result};
use crate::submanifold::{DiscreteImmersion, Shape};

/// Upper bound on samples per file, so a header cannot request absurd allocations.
pub const MAX_SAMPLES: usize = 1 << 22;
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ImmersionTable {
    pub shape: Shape,
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
}

impl ImmersionTable {
    pub fn into_immersion(self, chart: Arc<AmbientChart>) -> Result<DiscreteImmersion> {
        if chart.dim() != self.dim {
            return Err(Error::validation(
                "dim",
                format!("file has dim={}, chart has dimension {}", self.dim, chart.dim()),
            ));
        }
        let samples = self.points.into_iter().map(DVector::from_vec).collect();
        match self.shape {
            Shape::Curve => DiscreteImmersion::curve(chart, samples),
            Shape::Grid { rows, cols, periodic } => DiscreteImmersion::surface(chart, samples, rows, cols, periodic),
        }
    }
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_count(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| perr(line, format!("{key}: expected a non-negative integer, got {v:?}")))
}

fn parse_flag(line: usize, v: &str) -> Result<bool> {
    match v {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(perr(line, format!("periodic: expected 0 or 1, got {v:?}"))),
    }
}

fn parse_header(line: usize, text: &str) -> Result<(Shape, usize)> {
    let (mut shape, mut dim, mut rows, mut cols, mut periodic) = (None, None, None, None, None);
    for field in text.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| perr(line, format!("expected key=value, got {field:?}")))?;
        let dup = match key {
            "shape" => shape.replace(value.to_string()).is_some(),
            "dim" => dim.replace(parse_count(line, key, value)?).is_some(),
            "rows" => rows.replace(parse_count(line, key, value)?).is_some(),
            "cols" => cols.replace(parse_count(line, key, value)?).is_some(),
            "periodic" => {
                let (a, b) = value
                    .split_once(',')
                    .ok_or_else(|| perr(line, "periodic: expected two flags like 0,1"))?;
                periodic.replace([parse_flag(line, a)?, parse_flag(line, b)?]).is_some()
            }
            _ => return Err(perr(line, format!("unknown header key {key:?}"))),
        };
        if dup {
            return Err(perr(line, format!("duplicate header key {key:?}")));
        }
    }
    let dim = dim.ok_or_else(|| perr(line, "header is missing dim"))?;
    if dim == 0 || dim > MAX_DIM {
        return Err(perr(line, format!("dim must lie in 1..={MAX_DIM}, got {dim}")));
    }
    let shape = match shape.as_deref() {
        Some("curve") => {
            if rows.is_some() || cols.is_some() || periodic.is_some() {
                return Err(perr(line, "rows, cols and periodic only apply to grids"));
            }
            Shape::Curve
        }
        Some("grid") => {
            let rows = rows.ok_or_else(|| perr(line, "grid header is missing rows"))?;
            let cols = cols.ok_or_else(|| perr(line, "grid header is missing cols"))?;
            match rows.checked_mul(cols) {
                Some(n) if n <= MAX_SAMPLES => {}
                _ => return Err(perr(line, format!("grid of {rows}×{cols} exceeds {MAX_SAMPLES} samples"))),
            }
            Shape::Grid {
                rows,
                cols,
                periodic: periodic.unwrap_or([false, false]),
            }
        }
        Some(other) => return Err(perr(line, format!("shape must be curve or grid, got {other:?}"))),
        None => return Err(perr(line, "header is missing shape")),
    };
    Ok((shape, dim))
}

/// Parses an immersion file. Line numbers in errors are 1-based.
pub fn parse_immersion_csv(text: &str) -> Result<ImmersionTable> {
    let mut header = None;
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let Some((_, dim)) = header else {
            header = Some(parse_header(line, body)?);
            continue;
        };
        if points.len() >= MAX_SAMPLES {
            return Err(perr(line, format!("more than {MAX_SAMPLES} samples")));
        }
        let row = body
            .split(',')
            .map(|c| {
                let c = c.trim();
                match c.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(perr(line, format!("expected a finite number, got {c:?}"))),
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != dim {
            return Err(perr(line, format!("expected {dim} columns, got {}", row.len())));
        }
        points.push(row);
    }
    let (shape, dim) = header.ok_or_else(|| perr(text.lines().count().max(1), "missing header line"))?;
    if let Shape::Grid { rows, cols, .. } = shape {
        if points.len() != rows * cols {
            return Err(perr(
                text.lines().count().max(1),
                format!("grid of {rows}×{cols} needs {} samples, got {}", rows * cols, points.len()),
            ));
        }
    }
    Ok(ImmersionTable { shape, dim, points })
}

pub fn read_immersion_csv(path: &Path, chart: Arc<AmbientChart>) -> Result<DiscreteImmersion> {
    parse_immersion_csv(&std::fs::read_to_string(path)?)?.into_immersion(chart)
}

/// Serializes samples with shortest round-trip formatting, so reading back is exact.
pub fn write_immersion_csv(imm: &DiscreteImmersion) -> String {
    let dim = imm.chart().dim();
    let mut out = match imm.shape() {
        Shape::Curve => format!("shape=curve dim={dim}\n"),
        Shape::Grid { rows, cols, periodic } => format!(
            "shape=grid dim={dim} rows={rows} cols={cols} periodic={},{}\n",
            periodic[0] as u8, periodic[1] as u8
        ),
    };
    for x in imm.samples() {
        let cells: Vec<String> = x.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
