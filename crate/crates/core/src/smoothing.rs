//! Gaussian pre-smoothing of the potential.
//!
//! Disordered (noisy) potentials produce exponentially localized
//! eigenvectors; blurring the potential before assembling the Hamiltonian
//! spreads them back out.

use crate::error::{Error, Result};
use crate::grid::{Field, FieldKind};
use crate::par;

/// Sampled Gaussian truncated at radius `ceil(4σ)` and normalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothing sigma must be positive, got {sigma}"
        )));
    }
    let radius = (4.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= total);
    Ok(kernel)
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_smooth(x: &Field, sigma: f64) -> Result<Field> {
    let kernel = gaussian_kernel(sigma)?;
    let (w, h) = (x.width(), x.height());
    let mut values = x.values().to_vec();
    par::for_each_chunk_mut(&mut values, w, |_, row| convolve_replicate(row, &kernel));
    if x.kind() == FieldKind::Image2D && h > 1 {
        let mut columns = vec![0.0; w * h];
        for r in 0..h {
            for c in 0..w {
                columns[c * h + r] = values[r * w + c];
            }
        }
        par::for_each_chunk_mut(&mut columns, h, |_, col| convolve_replicate(col, &kernel));
        for c in 0..w {
            for r in 0..h {
                values[r * w + c] = columns[c * h + r];
            }
        }
    }
    x.with_values(values)
}

fn convolve_replicate(line: &mut [f64], kernel: &[f64]) {
    let n = line.len() as isize;
    let radius = (kernel.len() / 2) as isize;
    let src = line.to_vec();
    for (k, out) in line.iter_mut().enumerate() {
        let k = k as isize;
        *out = kernel
            .iter()
            .enumerate()
            .map(|(j, w)| w * src[(k + j as isize - radius).clamp(0, n - 1) as usize])
            .sum();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{inverse_participation_ratio, total_variation_1d};
    use crate::eigen::eig_full;
    use crate::hamiltonian::{build_hamiltonian, BoundaryMode, PlanckMassRatio};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_is_fixed_point() {
        let f = Field::image(7, 5, vec![5.0; 35]).unwrap();
        for sigma in [0.3, 1.0, 2.5, 10.0] {
            let g = gaussian_smooth(&f, sigma).unwrap();
            assert!(g.values().iter().all(|v| (v - 5.0).abs() < 1e-12));
        }
    }

    #[test]
    fn impulse_response_is_the_kernel() {
        let n = 101;
        let mut v = vec![0.0; n];
        v[50] = 1.0;
        let out = gaussian_smooth(&Field::signal(v).unwrap(), 1.0).unwrap();
        // independent evaluation of the normalized truncated Gaussian
        let raw: Vec<f64> = (-4i32..=4).map(|k| (-(k * k) as f64 / 2.0).exp()).collect();
        let total: f64 = raw.iter().sum();
        for (k, r) in (-4i32..=4).zip(&raw) {
            assert!((out.values()[(50 + k) as usize] - r / total).abs() < 1e-6);
        }
        assert!(out.values()[..46].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn interior_mass_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut v = vec![0.0; 200];
        for x in &mut v[40..160] {
            *x = rng.random_range(0.0..10.0);
        }
        let f = Field::signal(v).unwrap();
        let g = gaussian_smooth(&f, 3.0).unwrap();
        let (a, b): (f64, f64) = (f.values().iter().sum(), g.values().iter().sum());
        assert!((a - b).abs() <= 1e-9 * a);
        assert!((f.mean() - g.mean()).abs() <= 1e-9);
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        let f = Field::signal(vec![1.0; 4]).unwrap();
        assert!(gaussian_smooth(&f, 0.0).is_err());
        assert!(gaussian_smooth(&f, -1.0).is_err());
    }

    #[test]
    fn separable_matches_direct_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (w, h) = (9, 6);
        let v: Vec<f64> = (0..w * h).map(|_| rng.random_range(0.0..1.0)).collect();
        let f = Field::image(w, h, v.clone()).unwrap();
        let sigma = 0.8;
        let g = gaussian_smooth(&f, sigma).unwrap();
        let k = gaussian_kernel(sigma).unwrap();
        let r = (k.len() / 2) as isize;
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut s = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let yy = (y + dy).clamp(0, h as isize - 1) as usize;
                        let xx = (x + dx).clamp(0, w as isize - 1) as usize;
                        s += k[(dy + r) as usize] * k[(dx + r) as usize] * v[yy * w + xx];
                    }
                }
                assert!((g.values()[y as usize * w + x as usize] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smoothing_delocalizes_ground_state() {
        let ratio = PlanckMassRatio::new(1.0).unwrap();
        let mut wins = 0;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = (0..128)
                .map(|_| 10.0 + rng.random_range(-3.0..3.0))
                .collect();
            let f = Field::signal(v).unwrap();
            let ground = |field: &Field| {
                let h = build_hamiltonian(field, ratio, BoundaryMode::GraphLaplacian).unwrap();
                let b = eig_full(&h).unwrap();
                inverse_participation_ratio(b.vector(b.count() - 1))
            };
            if ground(&gaussian_smooth(&f, 2.0).unwrap()) < ground(&f) {
                wins += 1;
            }
        }
        assert!(wins >= 18, "{wins}/20");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn total_variation_never_increases(
                v in proptest::collection::vec(-100.0f64..100.0, 2..80),
                sigma in 0.2f64..6.0,
            ) {
                let f = Field::signal(v).unwrap();
                let g = gaussian_smooth(&f, sigma).unwrap();
                prop_assert!(total_variation_1d(g.values()) <= total_variation_1d(f.values()) * (1.0 + 1e-12) + 1e-12);
            }
        }
    }
}
