//! Signals, images and their file formats.
//!
//! A [`Field`] stores samples row-major. Grid coordinates are 1-based in the
//! public [`GridIndexMap`] API so that cell `(i, j)` maps to linear index
//! `k = (i - 1) * n_cols + j`; horizontal neighbours are `k ± 1` (except
//! across row ends) and vertical neighbours are `k ± n_cols`.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    Signal1D,
    Image2D,
}

/// A 1D signal or a 2D grayscale image of real samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    kind: FieldKind,
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn signal(values: Vec<f64>) -> Result<Self> {
        let width = values.len();
        Self::new(FieldKind::Signal1D, width, 1, values)
    }

    /// `width` columns by `height` rows, row-major.
    pub fn image(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(FieldKind::Image2D, width, height, values)
    }

    pub fn new(kind: FieldKind, width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidField(format!("empty grid {width}x{height}")));
        }
        if kind == FieldKind::Signal1D && height != 1 {
            return Err(Error::InvalidField(format!(
                "1D signal with height {height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::InvalidField(format!(
                "{} values for a {width}x{height} grid",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!(
                "non-finite value at linear index {}",
                k + 1
            )));
        }
        Ok(Self {
            kind,
            width,
            height,
            values,
        })
    }

    /// Same grid, new samples.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.kind, self.width, self.height, values)
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn index_map(&self) -> GridIndexMap {
        GridIndexMap {
            n_rows: self.height,
            n_cols: self.width,
        }
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.kind == other.kind && self.width == other.width && self.height == other.height
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max - min`.
    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Swaps rows and columns. A 1D signal is returned unchanged.
    pub fn transposed(&self) -> Field {
        if self.kind == FieldKind::Signal1D {
            return self.clone();
        }
        let mut values = vec![0.0; self.len()];
        for r in 0..self.height {
            for c in 0..self.width {
                values[c * self.height + r] = self.values[r * self.width + c];
            }
        }
        Field {
            kind: self.kind,
            width: self.height,
            height: self.width,
            values,
        }
    }
}

/// Row-major bijection between 1-based grid cells and 1-based linear indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridIndexMap {
    pub n_rows: usize,
    pub n_cols: usize,
}

impl GridIndexMap {
    pub fn new(n_rows: usize, n_cols: usize) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "empty grid {n_rows}x{n_cols}"
            )));
        }
        Ok(Self { n_rows, n_cols })
    }

    pub fn len(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self, i: usize, j: usize) -> Result<usize> {
        if i == 0 || j == 0 || i > self.n_rows || j > self.n_cols {
            return Err(Error::IndexOutOfRange {
                row: i,
                col: j,
                rows: self.n_rows,
                cols: self.n_cols,
            });
        }
        Ok((i - 1) * self.n_cols + j)
    }

    pub fn unflatten(&self, k: usize) -> Result<(usize, usize)> {
        if k == 0 || k > self.len() {
            return Err(Error::LinearIndexOutOfRange {
                index: k,
                len: self.len(),
            });
        }
        Ok(((k - 1) / self.n_cols + 1, (k - 1) % self.n_cols + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldFormat {
    Pgm,
    Csv,
}

impl FieldFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "pgm" | "pnm" => Some(FieldFormat::Pgm),
            "csv" | "txt" => Some(FieldFormat::Csv),
            _ => None,
        }
    }
}

pub fn load_field(path: impl AsRef<Path>, format: FieldFormat) -> Result<Field> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        FieldFormat::Pgm => parse_pgm(path, &bytes),
        FieldFormat::Csv => parse_csv(path, &bytes),
    }
}

pub fn save_field(field: &Field, path: impl AsRef<Path>, format: FieldFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        FieldFormat::Pgm => encode_pgm(field),
        FieldFormat::Csv => encode_csv(field).into_bytes(),
    };
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Shortest representation that parses back exactly, switching to exponent
/// notation for very small or very large magnitudes.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn encode_csv(field: &Field) -> String {
    let mut out = String::new();
    for row in field.values.chunks(row_len(field)) {
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format_number(*v));
        }
        out.push('\n');
    }
    out
}

// 1D signals are written one sample per line.
fn row_len(field: &Field) -> usize {
    match field.kind {
        FieldKind::Signal1D => 1,
        FieldKind::Image2D => field.width,
    }
}

fn parse_csv(path: &Path, bytes: &[u8]) -> Result<Field> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let location = e
                .position()
                .map(|p| format!("line {}", p.line()))
                .unwrap_or_else(|| "unknown position".into());
            Error::parse(path, location, e.to_string())
        })?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(rows.len() as u64 + 1);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>().map_err(|_| {
                    Error::parse(
                        path,
                        format!("line {line}, column {}", c + 1),
                        format!("not a number: {cell:?}"),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    path,
                    format!("line {line}"),
                    format!(
                        "non-rectangular CSV: {} columns, expected {}",
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "line 1", "empty CSV"));
    }
    let n_cols = rows[0].len();
    let n_rows = rows.len();
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    let field = if n_cols == 1 {
        Field::signal(values)
    } else {
        Field::image(n_cols, n_rows, values)
    };
    field.map_err(|e| Error::parse(path, "content", e.to_string()))
}

/// Binary P5 at maxval 255; samples are clamped to `[0, 255]` and rounded.
pub fn encode_pgm(field: &Field) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", field.width, field.height).into_bytes();
    out.extend(
        field
            .values
            .iter()
            .map(|v| v.clamp(0.0, 255.0).round() as u8),
    );
    out
}

struct PgmCursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl PgmCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error(start, "unexpected end of file"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| self.error(start, "non-ASCII token"))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let start = self.pos;
        let token = self.token()?.to_owned();
        token
            .parse::<usize>()
            .map_err(|_| self.error(start, &format!("invalid {what}: {token:?}")))
    }

    fn error(&self, offset: usize, message: &str) -> Error {
        Error::parse(self.path, format!("byte offset {offset}"), message)
    }
}

fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<Field> {
    let mut cur = PgmCursor {
        path,
        bytes,
        pos: 0,
    };
    let binary = match cur.token()? {
        "P2" => false,
        "P5" => true,
        other => {
            let msg = format!("unsupported magic {other:?}, expected P2 or P5");
            return Err(cur.error(0, &msg));
        }
    };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(cur.error(cur.pos, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(cur.error(cur.pos, &format!("maxval {maxval} outside 1..=65535")));
    }
    let n = width * height;
    let mut values = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = cur.pos + 1;
        let sample_bytes = if maxval < 256 { 1 } else { 2 };
        let end = start + n * sample_bytes;
        if end > bytes.len() {
            return Err(cur.error(
                bytes.len(),
                &format!("raster truncated: need {} bytes", n * sample_bytes),
            ));
        }
        let raster = &bytes[start..end];
        if sample_bytes == 1 {
            values.extend(raster.iter().map(|&b| b as f64));
        } else {
            values.extend(
                raster
                    .chunks_exact(2)
                    .map(|p| u16::from_be_bytes([p[0], p[1]]) as f64),
            );
        }
    } else {
        for _ in 0..n {
            values.push(cur.number("sample")? as f64);
        }
    }
    if let Some(k) = values.iter().position(|&v| v > maxval as f64) {
        return Err(cur.error(
            cur.pos,
            &format!("sample {} exceeds maxval {maxval}", k + 1),
        ));
    }
    Field::image(width, height, values).map_err(|e| cur.error(0, &e.to_string()))
}
