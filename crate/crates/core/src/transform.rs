//! Projection onto an [`EigenBasis`], ramp thresholding by index, and
//! reconstruction `x̂ = Σ α_i τ_i ψ_i`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eigen::EigenBasis;
use crate::error::{Error, Result};
use crate::grid::{Field, FieldKind};
use crate::par;

/// Which basis vector receives threshold index 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientOrder {
    /// Index 1 is the lowest eigenvalue: the ramp keeps the smooth,
    /// low-energy states and discards the oscillatory high-energy ones.
    #[default]
    AscendingEnergy,
    /// Index 1 is the highest eigenvalue, i.e. the storage order of
    /// [`EigenBasis`].
    DescendingEnergy,
}

impl FromStr for CoefficientOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ascending-energy" | "ascending" | "lowest-first" => {
                Ok(CoefficientOrder::AscendingEnergy)
            }
            "descending-energy" | "descending" | "highest-first" => {
                Ok(CoefficientOrder::DescendingEnergy)
            }
            _ => Err(Error::InvalidParameter(format!(
                "unknown coefficient order {s:?}"
            ))),
        }
    }
}

impl fmt::Display for CoefficientOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoefficientOrder::AscendingEnergy => "ascending-energy",
            CoefficientOrder::DescendingEnergy => "descending-energy",
        })
    }
}

/// Ramp threshold: `τ_i = 1` for `i ≤ s`, then `1 − (i − s)/ρ` while
/// positive, then 0. Indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdProfile {
    pub s: usize,
    pub rho: f64,
    #[serde(default)]
    pub order: CoefficientOrder,
}

impl ThresholdProfile {
    pub fn new(s: usize, rho: f64) -> Result<Self> {
        Self::with_order(s, rho, CoefficientOrder::default())
    }

    pub fn with_order(s: usize, rho: f64, order: CoefficientOrder) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ramp length rho must be positive, got {rho}"
            )));
        }
        Ok(Self { s, rho, order })
    }

    /// A profile that keeps everything up to index `n`.
    pub fn identity(n: usize) -> Self {
        Self {
            s: n,
            rho: 1.0,
            order: CoefficientOrder::default(),
        }
    }

    pub fn tau(&self, i: usize) -> f64 {
        tau(self, i)
    }

    /// Number of leading indices with `τ_i > 0`.
    pub fn support(&self) -> usize {
        let mut n = self.s + (self.rho.ceil() as usize).saturating_sub(1);
        while self.tau(n + 1) > 0.0 {
            n += 1;
        }
        while n > self.s && self.tau(n) <= 0.0 {
            n -= 1;
        }
        n
    }
}

pub fn tau(profile: &ThresholdProfile, i: usize) -> f64 {
    if i <= profile.s {
        return 1.0;
    }
    let ramp = 1.0 - (i - profile.s) as f64 / profile.rho;
    if ramp > 0.0 {
        ramp
    } else {
        0.0
    }
}

/// Projection coefficients `α_i = ψ_i·x` in basis storage order, plus the
/// grid they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub alpha: Vec<f64>,
    kind: FieldKind,
    width: usize,
    height: usize,
}

impl Coefficients {
    pub fn new(alpha: Vec<f64>, like: &Field) -> Self {
        Self {
            alpha,
            kind: like.kind(),
            width: like.width(),
            height: like.height(),
        }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// `Σ α_i²`.
    pub fn energy(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum()
    }
}

pub fn project(basis: &EigenBasis, x: &Field) -> Result<Coefficients> {
    if basis.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: x.len(),
        });
    }
    let alpha = par::map_range(basis.count(), |i| par::dot(basis.vector(i), x.values()));
    Ok(Coefficients::new(alpha, x))
}

/// 1-based threshold index of the basis vector stored at `i` (0-based).
pub fn threshold_index(order: CoefficientOrder, i: usize, count: usize) -> usize {
    match order {
        CoefficientOrder::DescendingEnergy => i + 1,
        CoefficientOrder::AscendingEnergy => count - i,
    }
}

/// `τ` for every stored basis vector.
pub fn weights(profile: &ThresholdProfile, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| profile.tau(threshold_index(profile.order, i, count)))
        .collect()
}

pub fn reconstruct(
    basis: &EigenBasis,
    coeffs: &Coefficients,
    profile: &ThresholdProfile,
) -> Result<Field> {
    if coeffs.len() != basis.count() {
        return Err(Error::DimensionMismatch {
            expected: basis.count(),
            actual: coeffs.len(),
        });
    }
    if coeffs.width * coeffs.height != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: coeffs.width * coeffs.height,
        });
    }
    let scaled: Vec<(usize, f64)> = weights(profile, basis.count())
        .into_iter()
        .zip(&coeffs.alpha)
        .enumerate()
        .filter(|(_, (t, _))| *t > 0.0)
        .map(|(i, (t, a))| (i, t * a))
        .collect();
    let mut out = vec![0.0; basis.dim()];
    const CHUNK: usize = 512;
    par::for_each_chunk_mut(&mut out, CHUNK, |ci, chunk| {
        let base = ci * CHUNK;
        for &(i, w) in &scaled {
            let v = &basis.vector(i)[base..base + chunk.len()];
            for (slot, x) in chunk.iter_mut().zip(v) {
                *slot += w * x;
            }
        }
    });
    Field::new(coeffs.kind, coeffs.width, coeffs.height, out)
}
