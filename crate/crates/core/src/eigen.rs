//! Symmetric eigendecomposition.
//!
//! [`eig_full`] reduces the dense matrix to tridiagonal form by Householder
//! reflections and diagonalizes it with implicit QL. [`eig_partial`] runs a
//! block Lanczos iteration with full reorthogonalization and extracts Ritz
//! pairs from either end of the spectrum; the block size lets it resolve
//! eigenvalues of multiplicity up to the block size, which is common on
//! square images.
//!
//! Every [`EigenBasis`] stores its pairs by descending eigenvalue and fixes
//! the sign of each vector so that its largest-magnitude component (first
//! one on ties) is positive.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// A real symmetric linear operator.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    /// `out = A v`.
    fn apply_into(&self, v: &[f64], out: &mut [f64]);

    /// Row-major dense copy.
    fn to_dense(&self) -> Vec<f64>;
}

/// Plain dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymmetric {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: data.len(),
            });
        }
        for a in 0..n {
            for b in 0..a {
                if data[a * n + b] != data[b * n + a] {
                    return Err(Error::InvalidParameter(format!(
                        "matrix not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (k, &d) in diag.iter().enumerate() {
            data[k * n + k] = d;
        }
        Self { n, data }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.n + b]
    }
}

impl SymmetricOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        par::for_each_chunk_mut(out, 64, |ci, chunk| {
            for (o, slot) in chunk.iter_mut().enumerate() {
                let row = ci * 64 + o;
                *slot = par::dot(&self.data[row * n..(row + 1) * n], v);
            }
        });
    }

    fn to_dense(&self) -> Vec<f64> {
        self.data.clone()
    }
}

/// Which end of the spectrum [`eig_partial`] targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Lowest,
    Highest,
}

impl FromStr for Which {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lowest" | "low" => Ok(Which::Lowest),
            "highest" | "high" => Ok(Which::Highest),
            _ => Err(Error::InvalidParameter(format!(
                "unknown spectrum end {s:?}"
            ))),
        }
    }
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Which::Lowest => "lowest",
            Which::Highest => "highest",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenConfig {
    /// Largest dimension [`eig_full`] accepts.
    pub dense_limit: usize,
    /// QL sweeps allowed per eigenvalue.
    pub max_ql_sweeps: usize,
    /// Lanczos block width.
    pub block_size: usize,
    /// Largest Krylov basis the partial solver may build (capped at the dimension).
    pub max_basis: Option<usize>,
    /// Ritz pairs are accepted once `‖Hy − θy‖ ≤ tolerance · max(1, |θ|)`.
    pub tolerance: f64,
    /// Seed for the Lanczos starting block.
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            dense_limit: 4096,
            max_ql_sweeps: 60,
            block_size: 4,
            max_basis: None,
            tolerance: 1e-10,
            seed: 0x5EED,
        }
    }
}

/// Orthonormal eigenvectors with their eigenvalues, by descending eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    dim: usize,
    eigenvalues: Vec<f64>,
    // count × dim, row i is ψ_{i+1}
    vectors: Vec<f64>,
}

impl EigenBasis {
    /// Builds a basis from unordered pairs; sorts them and fixes signs.
    pub fn from_pairs(dim: usize, eigenvalues: Vec<f64>, vectors: Vec<f64>) -> Result<Self> {
        let m = eigenvalues.len();
        if vectors.len() != m * dim {
            return Err(Error::DimensionMismatch {
                expected: m * dim,
                actual: vectors.len(),
            });
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]).then(a.cmp(&b)));
        let mut sorted_values = Vec::with_capacity(m);
        let mut sorted_vectors = Vec::with_capacity(m * dim);
        for &i in &order {
            sorted_values.push(eigenvalues[i]);
            let mut v = vectors[i * dim..(i + 1) * dim].to_vec();
            fix_sign(&mut v);
            sorted_vectors.extend_from_slice(&v);
        }
        Ok(Self {
            dim,
            eigenvalues: sorted_values,
            vectors: sorted_vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector `i` (0-based, 0 = highest eigenvalue).
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.vectors.chunks_exact(self.dim)
    }

    /// `‖Aψ_i − λ_iψ_i‖₂` for every pair.
    pub fn residual_norms(&self, op: &impl SymmetricOperator) -> Vec<f64> {
        let mut hv = vec![0.0; self.dim];
        self.vectors()
            .zip(&self.eigenvalues)
            .map(|(v, &lambda)| {
                op.apply_into(v, &mut hv);
                hv.iter()
                    .zip(v)
                    .map(|(h, x)| (h - lambda * x).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// Largest `|ψ_i·ψ_j − δ_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let m = self.count();
        let rows = par::map_range(m, |i| {
            (0..=i)
                .map(|j| {
                    let d = par::dot(self.vector(i), self.vector(j));
                    if i == j {
                        (d - 1.0).abs()
                    } else {
                        d.abs()
                    }
                })
                .fold(0.0, f64::max)
        });
        rows.into_iter().fold(0.0, f64::max)
    }
}

// Largest-magnitude component positive; earliest index wins ties.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = k;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn eig_full(op: &impl SymmetricOperator) -> Result<EigenBasis> {
    eig_full_with(op, &EigenConfig::default())
}

pub fn eig_full_with(op: &impl SymmetricOperator, config: &EigenConfig) -> Result<EigenBasis> {
    let n = op.dim();
    if n > config.dense_limit {
        return Err(Error::DenseLimitExceeded {
            dim: n,
            limit: config.dense_limit,
        });
    }
    let (values, vectors) = symmetric_eigen(op.to_dense(), n, config.max_ql_sweeps)?;
    EigenBasis::from_pairs(n, values, vectors)
}

/// Dense symmetric eigensolver. Returns ascending eigenvalues and the
/// eigenvectors as rows of an `n × n` row-major matrix.
pub fn symmetric_eigen(
    matrix: Vec<f64>,
    n: usize,
    max_sweeps: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if matrix.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            actual: matrix.len(),
        });
    }
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    // tred2 works on the transpose of the accumulated transform: row j of `w`
    // holds column j, so all inner loops run over contiguous memory. The QL
    // rotations then mix rows of `w`, which end up as the eigenvectors.
    let mut w = matrix;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder_tridiagonalize(&mut w, n, &mut d, &mut e);
    implicit_ql(&mut w, n, &mut d, &mut e, max_sweeps)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n * n);
    for &j in &order {
        values.push(d[j]);
        vectors.extend_from_slice(&w[j * n..(j + 1) * n]);
    }
    Ok((values, vectors))
}

// Householder reduction to tridiagonal form with accumulated transforms
// (EISPACK tred2), operating on the transposed accumulator `w`.
fn householder_tridiagonalize(w: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = w[j * n + n - 1];
    }
    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = w[j * n + i - 1];
                w[j * n + i] = 0.0;
                w[i * n + j] = 0.0;
            }
        } else {
            for x in &mut d[..i] {
                *x /= scale;
                h += *x * *x;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].iter_mut().for_each(|x| *x = 0.0);

            for j in 0..i {
                let f = d[j];
                w[i * n + j] = f;
                let row = &w[j * n..j * n + i];
                let g = e[j] + par::dot(&row[j..], &d[j..i]);
                for (ek, rk) in e[j + 1..i].iter_mut().zip(&row[j + 1..]) {
                    *ek += rk * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            {
                let (d_ro, e_ro) = (&*d, &*e);
                par::for_each_chunk_mut(&mut w[..i * n], n, |j, row| {
                    let (f, g) = (d_ro[j], e_ro[j]);
                    for k in j..i {
                        row[k] -= f * e_ro[k] + g * d_ro[k];
                    }
                });
            }
            for j in 0..i {
                d[j] = w[j * n + i - 1];
                w[j * n + i] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        w[i * n + n - 1] = w[i * n + i];
        w[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            let (lower, upper) = w.split_at_mut((i + 1) * n);
            let pivot = &upper[..n];
            let scaled: Vec<f64> = pivot[..=i].iter().map(|x| x / h).collect();
            par::for_each_chunk_mut(lower, n, |_, row| {
                let g = par::dot(&pivot[..=i], &row[..=i]);
                for k in 0..=i {
                    row[k] -= g * scaled[k];
                }
            });
        }
        w[(i + 1) * n..(i + 1) * n + i + 1]
            .iter_mut()
            .for_each(|x| *x = 0.0);
    }
    for j in 0..n {
        d[j] = w[j * n + n - 1];
        w[j * n + n - 1] = 0.0;
    }
    w[n * n - 1] = 1.0;
    e[0] = 0.0;
}

// Columns per block of the rotated basis. A block's two rows touched by a
// rotation stay in L1 and the update vectorizes across columns.
const QL_BLOCK: usize = 64;

// Row-major `n × n` to column blocks of width `QL_BLOCK`, each block stored
// row-major and contiguous.
fn to_column_blocks(w: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * n);
    for start in (0..n).step_by(QL_BLOCK) {
        let end = (start + QL_BLOCK).min(n);
        for row in w.chunks_exact(n) {
            out.extend_from_slice(&row[start..end]);
        }
    }
    out
}

fn from_column_blocks(blocks: &[f64], w: &mut [f64], n: usize) {
    for (b, block) in blocks.chunks(n * QL_BLOCK).enumerate() {
        let width = block.len() / n;
        for (row, src) in w.chunks_exact_mut(n).zip(block.chunks_exact(width)) {
            row[b * QL_BLOCK..b * QL_BLOCK + width].copy_from_slice(src);
        }
    }
}

// Implicit QL on the tridiagonal (d, e) (EISPACK tql2). Row i of `w` is the
// i-th column of the accumulated transform. The Givens rotations of each
// sweep are recorded, then applied block by block.
fn implicit_ql(
    w: &mut [f64],
    n: usize,
    d: &mut [f64],
    e: &mut [f64],
    max_sweeps: usize,
) -> Result<()> {
    let mut v = to_column_blocks(w, n);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let mut rotations: Vec<(usize, f64, f64)> = Vec::with_capacity(n);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > max_sweeps {
                    return Err(Error::NoConvergence {
                        iterations: sweeps - 1,
                        detail: format!(
                            "QL stalled at eigenvalue {l} with off-diagonal {:.3e}",
                            e[l]
                        ),
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for x in &mut d[l + 2..n] {
                    *x -= h;
                }
                f += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                rotations.clear();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotations.push((i, c, s));
                }
                let rot = &rotations;
                par::for_each_chunk_mut(&mut v, n * QL_BLOCK, |_, block| {
                    let width = block.len() / n;
                    for &(i, c, s) in rot {
                        let (upper, lower) = block.split_at_mut((i + 1) * width);
                        let zi = &mut upper[i * width..];
                        let zj = &mut lower[..width];
                        for (a, b) in zi.iter_mut().zip(zj.iter_mut()) {
                            let h = *b;
                            *b = s * *a + c * h;
                            *a = c * *a - s * h;
                        }
                    }
                });
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    from_column_blocks(&v, w, n);
    Ok(())
}

pub fn eig_partial(op: &impl SymmetricOperator, m: usize, which: Which) -> Result<EigenBasis> {
    eig_partial_with(op, m, which, &EigenConfig::default())
}

/// `m` extremal eigenpairs by block Lanczos with full reorthogonalization.
///
/// The projected matrix `QᵀHQ` is formed explicitly from the stored products
/// `HQ`, so the Ritz values are exact Rayleigh-Ritz values of the Krylov
/// subspace. Ritz pairs are checked at geometrically spaced basis sizes.
pub fn eig_partial_with(
    op: &impl SymmetricOperator,
    m: usize,
    which: Which,
    config: &EigenConfig,
) -> Result<EigenBasis> {
    let dim = op.dim();
    if m == 0 || m > dim {
        return Err(Error::InvalidParameter(format!(
            "requested {m} eigenpairs of a {dim}-dimensional operator"
        )));
    }
    let max_basis = config.max_basis.unwrap_or(dim).clamp(m, dim);
    let block = config.block_size.clamp(1, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut products: Vec<Vec<f64>> = Vec::new();
    // projected[i][j] = q_i·Hq_j for j ≤ i
    let mut projected: Vec<Vec<f64>> = Vec::new();
    let mut candidates: Vec<Vec<f64>> = (0..block).map(|_| random_vector(&mut rng, dim)).collect();
    let mut next_check = (2 * m + block).max(20).min(max_basis);
    let mut best_residual = f64::INFINITY;

    loop {
        let first_new = basis.len();
        for candidate in candidates.drain(..) {
            if basis.len() == max_basis {
                break;
            }
            let Some(q) = orthonormalize_against(&basis, candidate, &mut rng) else {
                break;
            };
            let mut hq = vec![0.0; dim];
            op.apply_into(&q, &mut hq);
            let row = par::map_slice(&basis, |b| par::dot(b, &hq));
            let mut row = row;
            row.push(par::dot(&q, &hq));
            projected.push(row);
            basis.push(q);
            products.push(hq);
        }
        let k = basis.len();
        let exhausted = k == max_basis || k == first_new;

        if k >= next_check || exhausted {
            if k >= m {
                let (pairs, worst) = ritz_pairs(
                    &basis,
                    &products,
                    &projected,
                    m,
                    which,
                    config.max_ql_sweeps,
                )?;
                best_residual = best_residual.min(worst);
                if worst <= config.tolerance {
                    let (values, vectors) = pairs;
                    return EigenBasis::from_pairs(dim, values, vectors);
                }
            }
            if exhausted {
                return Err(Error::NoConvergence {
                    iterations: k,
                    detail: format!(
                        "Krylov basis reached {k} vectors; best scaled residual {best_residual:.3e} > {:.1e}",
                        config.tolerance
                    ),
                });
            }
            next_check = (k + block).max(k + k / 4).min(max_basis);
        }
        candidates = products[first_new..].to_vec();
    }
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

// Two passes of classical Gram-Schmidt; falls back to fresh random vectors
// when the candidate lies (numerically) inside the current basis.
fn orthonormalize_against(
    basis: &[Vec<f64>],
    mut v: Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<f64>> {
    let dim = v.len();
    if basis.len() >= dim {
        return None;
    }
    for _attempt in 0..8 {
        let original = par::norm(&v);
        if original > 0.0 {
            for _pass in 0..2 {
                let coeffs = par::map_slice(basis, |b| par::dot(b, &v));
                par::for_each_chunk_mut(&mut v, 512, |ci, chunk| {
                    let base = ci * 512;
                    for (b, &c) in basis.iter().zip(&coeffs) {
                        for (slot, x) in chunk.iter_mut().zip(&b[base..]) {
                            *slot -= c * x;
                        }
                    }
                });
            }
            let norm = par::norm(&v);
            if norm > 1e-8 * original {
                v.iter_mut().for_each(|x| *x /= norm);
                return Some(v);
            }
        }
        v = random_vector(rng, dim);
    }
    None
}

type Pairs = (Vec<f64>, Vec<f64>);

// Returns the wanted Ritz pairs and their worst scaled residual.
fn ritz_pairs(
    basis: &[Vec<f64>],
    products: &[Vec<f64>],
    projected: &[Vec<f64>],
    m: usize,
    which: Which,
    max_sweeps: usize,
) -> Result<(Pairs, f64)> {
    let k = basis.len();
    let dim = basis[0].len();
    let mut t = vec![0.0; k * k];
    for (i, row) in projected.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            t[i * k + j] = x;
            t[j * k + i] = x;
        }
    }
    let (theta, z) = symmetric_eigen(t, k, max_sweeps)?;
    let picks: Vec<usize> = match which {
        Which::Lowest => (0..m).collect(),
        Which::Highest => (k - m..k).collect(),
    };
    let results = par::map_slice(&picks, |&p| {
        let coeffs = &z[p * k..(p + 1) * k];
        let mut y = vec![0.0; dim];
        let mut hy = vec![0.0; dim];
        for ((q, hq), &c) in basis.iter().zip(products).zip(coeffs) {
            for ((ys, hs), (qx, hx)) in y.iter_mut().zip(hy.iter_mut()).zip(q.iter().zip(hq)) {
                *ys += c * qx;
                *hs += c * hx;
            }
        }
        let norm = par::norm(&y);
        y.iter_mut().for_each(|x| *x /= norm);
        hy.iter_mut().for_each(|x| *x /= norm);
        let lambda = theta[p];
        let residual = hy
            .iter()
            .zip(&y)
            .map(|(h, x)| (h - lambda * x).powi(2))
            .sum::<f64>()
            .sqrt();
        (lambda, y, residual / lambda.abs().max(1.0))
    });
    let worst = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut values = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m * dim);
    for (lambda, y, _) in results {
        values.push(lambda);
        vectors.extend(y);
    }
    Ok(((values, vectors), worst))
}

/// Largest principal angle (radians) between the spans of two sets of
/// orthonormal vectors of equal count.
pub fn max_principal_angle(a: &[&[f64]], b: &[&[f64]]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidParameter(
            "subspaces must be non-empty and of equal dimension".into(),
        ));
    }
    let p = b.len();
    let dim = b[0].len();
    // columns of B − A(AᵀB); the largest singular value is sin θ_max
    let residual: Vec<Vec<f64>> = b
        .iter()
        .map(|bj| {
            let mut r = bj.to_vec();
            for ai in a {
                let c = par::dot(ai, bj);
                for (slot, x) in r.iter_mut().zip(ai.iter()) {
                    *slot -= c * x;
                }
            }
            debug_assert_eq!(r.len(), dim);
            r
        })
        .collect();
    let mut gram = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            gram[i * p + j] = par::dot(&residual[i], &residual[j]);
        }
    }
    let (values, _) = symmetric_eigen(gram, p, 60)?;
    let sigma = values.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    Ok(sigma.min(1.0).asin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Field;
    use crate::hamiltonian::{build_hamiltonian, BoundaryMode, PlanckMassRatio};

    fn random_symmetric(n: usize, seed: u64) -> DenseSymmetric {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..=a {
                let x = rng.random_range(-1.0..1.0);
                data[a * n + b] = x;
                data[b * n + a] = x;
            }
        }
        DenseSymmetric::new(n, data).unwrap()
    }

    fn assert_valid(basis: &EigenBasis, op: &impl SymmetricOperator) {
        assert!(
            basis.orthonormality_error() <= 1e-8,
            "orthonormality {}",
            basis.orthonormality_error()
        );
        for (r, &l) in basis.residual_norms(op).iter().zip(basis.eigenvalues()) {
            assert!(*r <= 1e-8 * l.abs().max(1.0), "residual {r} for {l}");
        }
        assert!(basis.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        for v in basis.vectors() {
            assert!((par::norm(v) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn diagonal_matrix() {
        let h = DenseSymmetric::from_diagonal(&[3.0, 1.0, 2.0]);
        let basis = eig_full(&h).unwrap();
        assert_eq!(basis.eigenvalues(), &[3.0, 2.0, 1.0]);
        assert_eq!(basis.vector(0), &[1.0, 0.0, 0.0]);
        assert_eq!(basis.vector(1), &[0.0, 0.0, 1.0]);
        assert_eq!(basis.vector(2), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn neumann_path_spectrum_n4() {
        let f = Field::signal(vec![0.0; 4]).unwrap();
        let h = build_hamiltonian(
            &f,
            PlanckMassRatio::new(1.0).unwrap(),
            BoundaryMode::GraphLaplacian,
        )
        .unwrap();
        let basis = eig_full(&h).unwrap();
        // 4 sin²(kπ/8), k = 3, 2, 1, 0
        let expected: Vec<f64> = (0..4)
            .rev()
            .map(|k| 4.0 * (k as f64 * std::f64::consts::PI / 8.0).sin().powi(2))
            .collect();
        for (got, want) in basis.eigenvalues().iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert_valid(&basis, &h);
    }

    #[test]
    fn spectral_reconstruction_and_completeness() {
        for n in [1, 2, 5, 17, 64] {
            let h = random_symmetric(n, n as u64);
            let basis = eig_full(&h).unwrap();
            assert_valid(&basis, &h);
            for a in 0..n {
                for b in 0..n {
                    let s: f64 = basis
                        .vectors()
                        .zip(basis.eigenvalues())
                        .map(|(v, l)| l * v[a] * v[b])
                        .sum();
                    assert!((s - h.get(a, b)).abs() <= 1e-8);
                }
            }
            let x: Vec<f64> = (0..n).map(|k| (k as f64 * 0.37).sin() + 0.1).collect();
            let mut back = vec![0.0; n];
            for v in basis.vectors() {
                let c = par::dot(v, &x);
                back.iter_mut().zip(v).for_each(|(s, q)| *s += c * q);
            }
            let err: f64 = back
                .iter()
                .zip(&x)
                .map(|(p, q)| (p - q).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-8 * par::norm(&x));
        }
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let h = random_symmetric(30, 3);
        let a = eig_full(&h).unwrap();
        let b = eig_full(&h).unwrap();
        assert_eq!(a, b);
        for v in a.vectors() {
            let k = (0..v.len()).fold(
                0,
                |best, k| if v[k].abs() > v[best].abs() { k } else { best },
            );
            assert!(v[k] > 0.0);
        }
    }

    #[test]
    fn dense_limit_enforced() {
        let h = DenseSymmetric::from_diagonal(&[1.0; 10]);
        let cfg = EigenConfig {
            dense_limit: 9,
            ..EigenConfig::default()
        };
        assert!(matches!(
            eig_full_with(&h, &cfg),
            Err(Error::DenseLimitExceeded { .. })
        ));
    }

    #[test]
    fn partial_diagonal_highest() {
        let h = DenseSymmetric::from_diagonal(&[5.0, 4.0, 3.0, 2.0, 1.0]);
        let basis = eig_partial(&h, 2, Which::Highest).unwrap();
        assert!((basis.eigenvalues()[0] - 5.0).abs() < 1e-12);
        assert!((basis.eigenvalues()[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn partial_full_subspace_matches_full() {
        let h = random_symmetric(12, 9);
        let full = eig_full(&h).unwrap();
        let part = eig_partial(&h, 12, Which::Lowest).unwrap();
        for (a, b) in full.eigenvalues().iter().zip(part.eigenvalues()) {
            assert!((a - b).abs() < 1e-6);
        }
        assert_valid(&part, &h);
    }

    #[test]
    fn partial_lowest_matches_full_on_random_100() {
        let h = random_symmetric(100, 42);
        let full = eig_full(&h).unwrap();
        for which in [Which::Lowest, Which::Highest] {
            let part = eig_partial(&h, 10, which).unwrap();
            assert_valid(&part, &h);
            let offset = match which {
                Which::Highest => 0,
                Which::Lowest => 90,
            };
            for i in 0..10 {
                assert!((part.eigenvalues()[i] - full.eigenvalues()[offset + i]).abs() <= 1e-6);
                let dot = par::dot(part.vector(i), full.vector(offset + i)).abs();
                let diff = (2.0 - 2.0 * dot).max(0.0).sqrt();
                assert!(diff <= 1e-4, "vector {i}: {diff}");
            }
        }
    }

    #[test]
    fn partial_resolves_degenerate_pairs() {
        // zero potential on a square grid: most Laplacian eigenvalues are doubled
        let f = Field::image(8, 8, vec![0.0; 64]).unwrap();
        let h = build_hamiltonian(
            &f,
            PlanckMassRatio::new(1.0).unwrap(),
            BoundaryMode::GraphLaplacian,
        )
        .unwrap();
        let full = eig_full(&h).unwrap();
        let part = eig_partial(&h, 9, Which::Lowest).unwrap();
        assert_valid(&part, &h);
        for i in 0..9 {
            assert!((part.eigenvalues()[i] - full.eigenvalues()[55 + i]).abs() <= 1e-6);
        }
        let a: Vec<&[f64]> = part.vectors().collect();
        let b: Vec<&[f64]> = (55..64).map(|i| full.vector(i)).collect();
        assert!(max_principal_angle(&a, &b).unwrap() < 1e-6);
    }

    #[test]
    fn partial_rejects_bad_counts() {
        let h = DenseSymmetric::from_diagonal(&[1.0, 2.0]);
        assert!(eig_partial(&h, 0, Which::Lowest).is_err());
        assert!(eig_partial(&h, 3, Which::Lowest).is_err());
    }

    #[test]
    fn principal_angle_of_rotated_plane() {
        let theta: f64 = 0.3;
        let e1 = [1.0, 0.0, 0.0];
        let rotated = [theta.cos(), 0.0, theta.sin()];
        let angle = max_principal_angle(&[&e1], &[&rotated]).unwrap();
        assert!((angle - theta).abs() < 1e-12);
        let e2 = [0.0, 1.0, 0.0];
        assert!(max_principal_angle(&[&e1, &e2], &[&e2, &e1]).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_dense() {
        assert!(DenseSymmetric::new(2, vec![1.0, 2.0, 3.0, 4.0]).is_err());
    }
}
