//! Discrete Schrödinger Hamiltonian `H = V + r·(−Δ)` over a signal or image.
//!
//! The potential `V` is the field itself and `r` is the ħ²/2m ratio. Every
//! pair of grid neighbours is coupled by `−r`; the diagonal carries
//! `V(k) + c_k·r` where `c_k` depends on the [`BoundaryMode`].

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eigen::SymmetricOperator;
use crate::error::{Error, Result};
use crate::grid::{Field, FieldKind};
use crate::par;

/// The ħ²/2m scale, strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PlanckMassRatio(f64);

impl PlanckMassRatio {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "ħ²/2m must be positive and finite, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PlanckMassRatio {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<PlanckMassRatio> for f64 {
    fn from(r: PlanckMassRatio) -> f64 {
        r.0
    }
}

/// How the diagonal coefficient is chosen at the grid boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Coefficient 2 on every cell of the first and last grid rows, 3 on the
    /// remaining cells of the first and last columns, 4 elsewhere. In 1D the
    /// two endpoints get 1.
    ///
    /// With 1-based linear index i on an N-column grid, the coefficient-3
    /// set is i mod N ∈ {0,1}. Taking it mod N² instead would select only
    /// cells 1 and N².
    PaperEq3,
    /// Coefficient equal to the number of in-grid neighbours (a graph
    /// Laplacian, i.e. Neumann boundaries).
    #[default]
    GraphLaplacian,
}

impl FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper-eq3" | "paper" | "papereq3" => Ok(BoundaryMode::PaperEq3),
            "graph-laplacian" | "graph" | "graphlaplacian" | "neumann" => {
                Ok(BoundaryMode::GraphLaplacian)
            }
            _ => Err(Error::InvalidParameter(format!(
                "unknown boundary mode {s:?}"
            ))),
        }
    }
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryMode::PaperEq3 => "paper-eq3",
            BoundaryMode::GraphLaplacian => "graph-laplacian",
        })
    }
}

/// Sparse symmetric Hamiltonian in compressed-row form.
///
/// Column indices within a row are strictly increasing and include the
/// diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    dim: usize,
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    ratio: PlanckMassRatio,
    boundary: BoundaryMode,
}

/// Assembles the Hamiltonian for either field kind.
pub fn build_hamiltonian(
    field: &Field,
    ratio: PlanckMassRatio,
    boundary: BoundaryMode,
) -> Result<HamiltonianMatrix> {
    match field.kind() {
        FieldKind::Signal1D => build_hamiltonian_1d(field, ratio, boundary),
        FieldKind::Image2D => build_hamiltonian_2d(field, ratio, boundary),
    }
}

pub fn build_hamiltonian_2d(
    field: &Field,
    ratio: PlanckMassRatio,
    boundary: BoundaryMode,
) -> Result<HamiltonianMatrix> {
    if field.kind() != FieldKind::Image2D {
        return Err(Error::InvalidField(
            "2D Hamiltonian requires an image".into(),
        ));
    }
    Ok(assemble(
        field.values(),
        field.height(),
        field.width(),
        ratio,
        |row, col| diagonal_coefficient_2d(row, col, field.height(), field.width(), boundary),
        boundary,
    ))
}

pub fn build_hamiltonian_1d(
    field: &Field,
    ratio: PlanckMassRatio,
    boundary: BoundaryMode,
) -> Result<HamiltonianMatrix> {
    if field.kind() != FieldKind::Signal1D {
        return Err(Error::InvalidField(
            "1D Hamiltonian requires a signal".into(),
        ));
    }
    let n = field.len();
    // Both modes agree in 1D: one neighbour at each end.
    Ok(assemble(
        field.values(),
        1,
        n,
        ratio,
        |_, col| neighbour_count(0, col, 1, n) as f64,
        boundary,
    ))
}

fn neighbour_count(row: usize, col: usize, n_rows: usize, n_cols: usize) -> usize {
    usize::from(row > 0)
        + usize::from(row + 1 < n_rows)
        + usize::from(col > 0)
        + usize::from(col + 1 < n_cols)
}

// 0-based row/col.
fn diagonal_coefficient_2d(
    row: usize,
    col: usize,
    n_rows: usize,
    n_cols: usize,
    boundary: BoundaryMode,
) -> f64 {
    match boundary {
        BoundaryMode::GraphLaplacian => neighbour_count(row, col, n_rows, n_cols) as f64,
        BoundaryMode::PaperEq3 => {
            if row == 0 || row + 1 == n_rows {
                2.0
            } else if col == 0 || col + 1 == n_cols {
                3.0
            } else {
                4.0
            }
        }
    }
}

fn assemble(
    potential: &[f64],
    n_rows: usize,
    n_cols: usize,
    ratio: PlanckMassRatio,
    coefficient: impl Fn(usize, usize) -> f64,
    boundary: BoundaryMode,
) -> HamiltonianMatrix {
    let dim = n_rows * n_cols;
    let r = ratio.value();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::with_capacity(5 * dim);
    let mut vals = Vec::with_capacity(5 * dim);
    row_ptr.push(0);
    for (k, &v) in potential.iter().enumerate().take(dim) {
        let (row, col) = (k / n_cols, k % n_cols);
        if row > 0 {
            cols.push(k - n_cols);
            vals.push(-r);
        }
        if col > 0 {
            cols.push(k - 1);
            vals.push(-r);
        }
        cols.push(k);
        vals.push(v + coefficient(row, col) * r);
        if col + 1 < n_cols {
            cols.push(k + 1);
            vals.push(-r);
        }
        if row + 1 < n_rows {
            cols.push(k + n_cols);
            vals.push(-r);
        }
        row_ptr.push(cols.len());
    }
    HamiltonianMatrix {
        dim,
        n_rows,
        n_cols,
        row_ptr,
        cols,
        vals,
        ratio,
        boundary,
    }
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ratio(&self) -> PlanckMassRatio {
        self.ratio
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    /// `(rows, cols)` of the grid the matrix was assembled on.
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzeros of row `k` (0-based) as `(column, value)`.
    pub fn row(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[k]..self.row_ptr[k + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    /// Entry `(a, b)`, 0-based.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        let span = self.row_ptr[a]..self.row_ptr[a + 1];
        match self.cols[span.clone()].binary_search(&b) {
            Ok(pos) => self.vals[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|k| self.get(k, k)).collect()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim * self.dim];
        for k in 0..self.dim {
            for (c, v) in self.row(k) {
                dense[k * self.dim + c] = v;
            }
        }
        dense
    }

    /// Writes `row col value` lines, 1-based, one per stored nonzero.
    pub fn write_coordinates<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for k in 0..self.dim {
            for (c, v) in self.row(k) {
                writeln!(out, "{} {} {}", k + 1, c + 1, v)?;
            }
        }
        Ok(())
    }
}

impl SymmetricOperator for HamiltonianMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        par::for_each_chunk_mut(out, 256, |chunk_idx, chunk| {
            let base = chunk_idx * 256;
            for (offset, slot) in chunk.iter_mut().enumerate() {
                *slot = self.row(base + offset).map(|(c, h)| h * v[c]).sum();
            }
        });
    }

    fn to_dense(&self) -> Vec<f64> {
        HamiltonianMatrix::to_dense(self)
    }
}
