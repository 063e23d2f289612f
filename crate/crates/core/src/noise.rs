//! Signal-dependent noise with SNR targeting.
//!
//! Draws come from `ChaCha8Rng` (rand_chacha 0.9) seeded with
//! `seed_from_u64(seed)`, one draw per sample in row-major order. Poisson
//! variates use rand_distr 0.5's `Poisson`, Gaussian variates its `Normal`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// `y = Poisson(a·x) / a` with the scale `a` set by the target SNR.
    Poisson,
    /// `y = x + n`, `n_k ~ N(0, β·x_k)`.
    #[serde(alias = "gaussian")]
    SignalDependentGaussian,
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(NoiseModel::Poisson),
            "gaussian" | "signal-dependent-gaussian" => Ok(NoiseModel::SignalDependentGaussian),
            _ => Err(Error::InvalidParameter(format!(
                "unknown noise model {s:?}"
            ))),
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseModel::Poisson => "poisson",
            NoiseModel::SignalDependentGaussian => "gaussian",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    pub target_snr_db: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corruption {
    pub noisy: Field,
    /// Empirical SNR of this draw.
    pub achieved_snr_db: f64,
}

/// Poisson scale `a` whose expected SNR `10·log₁₀(a·Σx² / Σx)` hits the target.
pub fn poisson_scale(x: &Field, target_snr_db: f64) -> Result<f64> {
    let (sum, sum_sq) = checked_sums(x, target_snr_db)?;
    Ok(sum / sum_sq * 10f64.powf(target_snr_db / 10.0))
}

/// Variance factor `β` with `10·log₁₀(Σx² / (β·Σx))` equal to the target.
pub fn gaussian_variance_factor(x: &Field, target_snr_db: f64) -> Result<f64> {
    let (sum, sum_sq) = checked_sums(x, target_snr_db)?;
    Ok(sum_sq / (sum * 10f64.powf(target_snr_db / 10.0)))
}

fn checked_sums(x: &Field, target_snr_db: f64) -> Result<(f64, f64)> {
    if !target_snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "target SNR must be finite, got {target_snr_db}"
        )));
    }
    if let Some(k) = x.values().iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidField(format!(
            "negative sample at linear index {} under a signal-dependent noise model",
            k + 1
        )));
    }
    let sum: f64 = x.values().iter().sum();
    if sum == 0.0 {
        return Err(Error::UndefinedMetric("SNR of an all-zero field".into()));
    }
    let sum_sq = x.values().iter().map(|v| v * v).sum();
    Ok((sum, sum_sq))
}

pub fn corrupt(x: &Field, spec: &NoiseSpec) -> Result<Corruption> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values: Vec<f64> = match spec.model {
        NoiseModel::Poisson => {
            let a = poisson_scale(x, spec.target_snr_db)?;
            x.values()
                .iter()
                .map(|&v| {
                    let lambda = a * v;
                    if lambda == 0.0 {
                        return Ok(0.0);
                    }
                    let dist = Poisson::new(lambda).map_err(|e| {
                        Error::InvalidParameter(format!("Poisson rate {lambda}: {e}"))
                    })?;
                    Ok(dist.sample(&mut rng) / a)
                })
                .collect::<Result<_>>()?
        }
        NoiseModel::SignalDependentGaussian => {
            let beta = gaussian_variance_factor(x, spec.target_snr_db)?;
            x.values()
                .iter()
                .map(|&v| {
                    let dist = Normal::new(0.0, (beta * v).sqrt())
                        .map_err(|e| Error::InvalidParameter(format!("Gaussian spread: {e}")))?;
                    Ok(v + dist.sample(&mut rng))
                })
                .collect::<Result<_>>()?
        }
    };
    let noisy = x.with_values(values)?;
    let achieved_snr_db = snr_db(x, &noisy)?;
    Ok(Corruption {
        noisy,
        achieved_snr_db,
    })
}

/// Draws with seeds `spec.seed`, `spec.seed + 1`, ... and returns the first
/// realization whose empirical SNR is within `tolerance_db` of the target.
/// Small fields scatter well away from the expected SNR; this pins the
/// realized corruption level.
pub fn corrupt_within(
    x: &Field,
    spec: &NoiseSpec,
    tolerance_db: f64,
    max_draws: usize,
) -> Result<Corruption> {
    if !(tolerance_db.is_finite() && tolerance_db > 0.0) || max_draws == 0 {
        return Err(Error::InvalidParameter(format!(
            "need tolerance > 0 and at least one draw, got {tolerance_db} dB and {max_draws}"
        )));
    }
    let mut closest = f64::NAN;
    for k in 0..max_draws {
        let draw = NoiseSpec {
            seed: spec.seed.wrapping_add(k as u64),
            ..*spec
        };
        let c = corrupt(x, &draw)?;
        let miss = (c.achieved_snr_db - spec.target_snr_db).abs();
        if miss <= tolerance_db {
            return Ok(c);
        }
        if closest.is_nan() || miss < closest {
            closest = miss;
        }
    }
    Err(Error::NoConvergence {
        iterations: max_draws,
        detail: format!(
            "no draw within {tolerance_db} dB of the target SNR; closest missed by {closest:.3} dB"
        ),
    })
}

/// `10·log₁₀(Σclean² / Σ(other − clean)²)`; `+∞` when the fields are identical.
pub fn snr_db(clean: &Field, other: &Field) -> Result<f64> {
    if !clean.same_shape(other) {
        return Err(Error::DimensionMismatch {
            expected: clean.len(),
            actual: other.len(),
        });
    }
    let signal: f64 = clean.values().iter().map(|v| v * v).sum();
    let noise: f64 = clean
        .values()
        .iter()
        .zip(other.values())
        .map(|(c, o)| (o - c).powi(2))
        .sum();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::make_signal;

    fn spec(model: NoiseModel, seed: u64) -> NoiseSpec {
        NoiseSpec {
            model,
            target_snr_db: 15.0,
            seed,
        }
    }

    #[test]
    fn snr_examples() {
        let clean = Field::signal(vec![10.0, 0.0]).unwrap();
        let other = Field::signal(vec![10.0, 1.0]).unwrap();
        assert!((snr_db(&clean, &other).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(snr_db(&clean, &clean).unwrap(), f64::INFINITY);
        let c2 = Field::signal(vec![30.0, 0.0]).unwrap();
        let o2 = Field::signal(vec![30.0, 3.0]).unwrap();
        assert!((snr_db(&c2, &o2).unwrap() - 20.0).abs() < 1e-12);
        assert!(snr_db(&clean, &Field::signal(vec![1.0]).unwrap()).is_err());
    }

    #[test]
    fn constant_field_hits_target() {
        let x = Field::signal(vec![100.0; 1_000_000]).unwrap();
        for model in [NoiseModel::Poisson, NoiseModel::SignalDependentGaussian] {
            let c = corrupt(&x, &spec(model, 9)).unwrap();
            assert!(
                (c.achieved_snr_db - 15.0).abs() <= 0.2,
                "{model}: {}",
                c.achieved_snr_db
            );
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let x = Field::signal((0..500).map(|k| (k % 17) as f64 + 1.0).collect()).unwrap();
        for model in [NoiseModel::Poisson, NoiseModel::SignalDependentGaussian] {
            let a = corrupt(&x, &spec(model, 1)).unwrap();
            let b = corrupt(&x, &spec(model, 1)).unwrap();
            let c = corrupt(&x, &spec(model, 2)).unwrap();
            assert_eq!(a, b);
            assert_ne!(a.noisy, c.noisy);
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        let zeros = Field::signal(vec![0.0; 10]).unwrap();
        assert!(corrupt(&zeros, &spec(NoiseModel::Poisson, 0)).is_err());
        let negative = Field::signal(vec![1.0, -1.0]).unwrap();
        assert!(corrupt(&negative, &spec(NoiseModel::Poisson, 0)).is_err());
        assert!(corrupt(&negative, &spec(NoiseModel::SignalDependentGaussian, 0)).is_err());
        let ok = Field::signal(vec![1.0, 2.0]).unwrap();
        let inf = NoiseSpec {
            target_snr_db: f64::INFINITY,
            ..spec(NoiseModel::Poisson, 0)
        };
        assert!(corrupt(&ok, &inf).is_err());
    }

    #[test]
    fn poisson_variance_is_x_over_a() {
        let x = Field::signal(vec![40.0; 50]).unwrap();
        let a = poisson_scale(&x, 15.0).unwrap();
        let reps = 10_000;
        let draws: Vec<f64> = (0..reps)
            .map(|seed| {
                corrupt(&x, &spec(NoiseModel::Poisson, seed))
                    .unwrap()
                    .noisy
                    .values()[7]
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / reps as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let expected = 40.0 / a;
        assert!(
            (var - expected).abs() <= 0.05 * expected,
            "{var} vs {expected}"
        );
    }

    #[test]
    fn ramp_fields_within_half_db() {
        let x = Field::signal((0..20_000).map(|k| 1.0 + (k % 200) as f64).collect()).unwrap();
        for model in [NoiseModel::Poisson, NoiseModel::SignalDependentGaussian] {
            for seed in 0..5 {
                let c = corrupt(&x, &spec(model, seed)).unwrap();
                assert!((c.achieved_snr_db - 15.0).abs() <= 0.5);
            }
        }
    }

    #[test]
    fn redraws_until_within_tolerance() {
        let x = make_signal(256, 7).unwrap();
        let spec = NoiseSpec {
            model: NoiseModel::Poisson,
            target_snr_db: 15.0,
            seed: 0,
        };
        let mut firsts = Vec::new();
        for seed in 0..20 {
            let s = NoiseSpec { seed, ..spec };
            let c = corrupt_within(&x, &s, 0.1, 200).unwrap();
            assert!((c.achieved_snr_db - 15.0).abs() <= 0.1);
            firsts.push(corrupt(&x, &s).unwrap().achieved_snr_db);
            assert_eq!(c, corrupt_within(&x, &s, 0.1, 200).unwrap());
        }
        // a loose tolerance accepts the first draw unchanged
        assert_eq!(
            corrupt_within(&x, &spec, 100.0, 1).unwrap(),
            corrupt(&x, &spec).unwrap()
        );
        assert!(firsts.iter().any(|v| (v - 15.0).abs() > 0.1));
        assert!(corrupt_within(&x, &spec, 1e-9, 3).is_err());
        assert!(corrupt_within(&x, &spec, 0.0, 3).is_err());
    }
}
