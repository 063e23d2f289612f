//! Comparison denoisers: index thresholding in the DCT-II basis and
//! isotropic total-variation (ROF) regularization.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Field, FieldKind};
use crate::transform::ThresholdProfile;

/// Orthonormal DCT-II matrix, row `k` is the `k`-th cosine.
fn dct_matrix(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for k in 0..n {
        let scale = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for j in 0..n {
            c[k * n + j] = scale * (PI * (j as f64 + 0.5) * k as f64 / n as f64).cos();
        }
    }
    c
}

/// `(rows, cols)` of the transform grid; a 1D signal is a single row.
fn grid_of(x: &Field) -> (usize, usize) {
    match x.kind() {
        FieldKind::Signal1D => (1, x.len()),
        FieldKind::Image2D => (x.height(), x.width()),
    }
}

/// Frequency pairs `(p, q)` sorted by the Neumann-Laplacian eigenvalue
/// `4sin²(πp/2R) + 4sin²(πq/2C)`, ties by `(p, q)`.
pub fn frequency_order(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let lap = |k: usize, n: usize| 4.0 * (PI * k as f64 / (2.0 * n as f64)).sin().powi(2);
    let mut order: Vec<(usize, usize)> = (0..rows)
        .flat_map(|p| (0..cols).map(move |q| (p, q)))
        .collect();
    order.sort_by(|a, b| {
        (lap(a.0, rows) + lap(a.1, cols))
            .total_cmp(&(lap(b.0, rows) + lap(b.1, cols)))
            .then(a.cmp(b))
    });
    order
}

// y = A x Bᵀ for row-major A (ra×ra), x (ra×cb), B (cb×cb); with `transpose`
// computes Aᵀ x B instead.
fn separable(
    a: &[f64],
    b: &[f64],
    x: &[f64],
    rows: usize,
    cols: usize,
    transpose: bool,
) -> Vec<f64> {
    let at = |i: usize, j: usize| {
        if transpose {
            a[j * rows + i]
        } else {
            a[i * rows + j]
        }
    };
    let bt = |i: usize, j: usize| {
        if transpose {
            b[j * cols + i]
        } else {
            b[i * cols + j]
        }
    };
    let mut tmp = vec![0.0; rows * cols];
    for i in 0..rows {
        for k in 0..rows {
            let w = at(i, k);
            if w == 0.0 {
                continue;
            }
            for j in 0..cols {
                tmp[i * cols + j] += w * x[k * cols + j];
            }
        }
    }
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[i * cols + j] = (0..cols).map(|k| tmp[i * cols + k] * bt(j, k)).sum();
        }
    }
    out
}

/// Applies the ramp profile to DCT-II coefficients ordered by increasing
/// spatial frequency (index 1 = DC). The profile's `order` field is ignored.
pub fn fourier_denoise(x: &Field, profile: &ThresholdProfile) -> Result<Field> {
    let (rows, cols) = grid_of(x);
    let (cr, cc) = (dct_matrix(rows), dct_matrix(cols));
    let mut coeffs = separable(&cr, &cc, x.values(), rows, cols, false);
    for (rank, (p, q)) in frequency_order(rows, cols).into_iter().enumerate() {
        coeffs[p * cols + q] *= profile.tau(rank + 1);
    }
    x.with_values(separable(&cr, &cc, &coeffs, rows, cols, true))
}

fn gradient(u: &[f64], rows: usize, cols: usize, gx: &mut [f64], gy: &mut [f64]) {
    for r in 0..rows {
        for c in 0..cols {
            let k = r * cols + c;
            gx[k] = if c + 1 < cols { u[k + 1] - u[k] } else { 0.0 };
            gy[k] = if r + 1 < rows {
                u[k + cols] - u[k]
            } else {
                0.0
            };
        }
    }
}

// Negative adjoint of `gradient`.
fn divergence(px: &[f64], py: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    for r in 0..rows {
        for c in 0..cols {
            let k = r * cols + c;
            let mut d = 0.0;
            if c + 1 < cols {
                d += px[k];
            }
            if c > 0 {
                d -= px[k - 1];
            }
            if r + 1 < rows {
                d += py[k];
            }
            if r > 0 {
                d -= py[k - cols];
            }
            out[k] = d;
        }
    }
}

/// Isotropic total variation with forward differences.
pub fn total_variation(x: &Field) -> f64 {
    let (rows, cols) = grid_of(x);
    let mut gx = vec![0.0; x.len()];
    let mut gy = vec![0.0; x.len()];
    gradient(x.values(), rows, cols, &mut gx, &mut gy);
    gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).sum()
}

/// `½‖u − x‖² + λ·TV(u)`.
pub fn tv_objective(u: &Field, x: &Field, lambda: f64) -> f64 {
    let fidelity: f64 = u
        .values()
        .iter()
        .zip(x.values())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    0.5 * fidelity + lambda * total_variation(u)
}

#[derive(Debug, Clone)]
pub struct TvOutcome {
    pub denoised: Field,
    /// Objective of the returned iterate after each iteration.
    pub objective: Vec<f64>,
}

pub fn tv_denoise(x: &Field, lambda: f64, iterations: usize) -> Result<Field> {
    Ok(tv_denoise_traced(x, lambda, iterations)?.denoised)
}

/// ROF denoising by fast gradient projection on the dual (Beck–Teboulle),
/// `u = x + λ·div p` with `|p| ≤ 1` pointwise.
///
/// Accelerated dual iterates do not decrease the primal objective
/// monotonically, so the lowest-objective primal iterate seen so far is
/// kept and returned.
pub fn tv_denoise_traced(x: &Field, lambda: f64, iterations: usize) -> Result<TvOutcome> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "TV weight must be positive, got {lambda}"
        )));
    }
    if iterations == 0 {
        return Err(Error::InvalidParameter(
            "TV needs at least one iteration".into(),
        ));
    }
    let (rows, cols) = grid_of(x);
    let n = x.len();
    let b = x.values();
    let step = 1.0 / (8.0 * lambda);
    let (mut px, mut py) = (vec![0.0; n], vec![0.0; n]);
    let (mut rx, mut ry) = (vec![0.0; n], vec![0.0; n]);
    let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
    let mut div = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut t = 1.0f64;

    let mut best = x.clone();
    let mut best_obj = tv_objective(x, x, lambda);
    let mut history = Vec::with_capacity(iterations);

    for _ in 0..iterations {
        divergence(&rx, &ry, rows, cols, &mut div);
        for k in 0..n {
            u[k] = b[k] + lambda * div[k];
        }
        gradient(&u, rows, cols, &mut gx, &mut gy);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        for k in 0..n {
            let qx = rx[k] + step * gx[k];
            let qy = ry[k] + step * gy[k];
            let scale = qx.hypot(qy).max(1.0);
            let (nx, ny) = (qx / scale, qy / scale);
            rx[k] = nx + momentum * (nx - px[k]);
            ry[k] = ny + momentum * (ny - py[k]);
            px[k] = nx;
            py[k] = ny;
        }
        t = t_next;

        divergence(&px, &py, rows, cols, &mut div);
        let candidate = x.with_values(
            b.iter()
                .zip(&div)
                .map(|(bk, dk)| bk + lambda * dk)
                .collect(),
        )?;
        let obj = tv_objective(&candidate, x, lambda);
        if obj <= best_obj {
            best_obj = obj;
            best = candidate;
        }
        history.push(best_obj);
    }
    Ok(TvOutcome {
        denoised: best,
        objective: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        let d: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        d / par::norm(b)
    }

    #[test]
    fn dct_is_orthonormal() {
        for n in [1, 2, 7, 16] {
            let c = dct_matrix(n);
            for a in 0..n {
                for b in 0..n {
                    let d = par::dot(&c[a * n..(a + 1) * n], &c[b * n..(b + 1) * n]);
                    assert!((d - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn full_profile_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let img =
            Field::image(9, 6, (0..54).map(|_| rng.random_range(0.0..5.0)).collect()).unwrap();
        let out = fourier_denoise(&img, &ThresholdProfile::identity(54)).unwrap();
        assert!(rel(out.values(), img.values()) < 1e-8);
        let sig = Field::signal((0..33).map(|_| rng.random_range(0.0..5.0)).collect()).unwrap();
        let out = fourier_denoise(&sig, &ThresholdProfile::identity(1000)).unwrap();
        assert!(rel(out.values(), sig.values()) < 1e-8);
    }

    #[test]
    fn lowest_cosine_survives_single_coefficient() {
        // the lowest frequency is DC; s = 1 keeps exactly it
        let sig = Field::signal(vec![3.5; 40]).unwrap();
        let out = fourier_denoise(&sig, &ThresholdProfile::new(1, 1.0).unwrap()).unwrap();
        assert!(rel(out.values(), sig.values()) < 1e-8);
        let img = Field::image(8, 5, vec![-2.0; 40]).unwrap();
        let out = fourier_denoise(&img, &ThresholdProfile::new(1, 1.0).unwrap()).unwrap();
        assert!(rel(out.values(), img.values()) < 1e-8);
    }

    #[test]
    fn white_noise_variance_drops() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 400;
        let sig = Field::signal((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let out = fourier_denoise(&sig, &ThresholdProfile::new(n / 10, 1.0).unwrap()).unwrap();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        assert!(var(out.values()) < var(sig.values()));
    }

    #[test]
    fn frequency_order_starts_at_dc() {
        let order = frequency_order(4, 6);
        assert_eq!(order[0], (0, 0));
        assert_eq!(order[1], (0, 1));
        assert_eq!(order.len(), 24);
    }

    #[test]
    fn tv_constant_is_fixed() {
        let f = Field::image(6, 5, vec![7.0; 30]).unwrap();
        for lambda in [0.1, 10.0, 1e4] {
            assert_eq!(tv_denoise(&f, lambda, 50).unwrap(), f);
        }
    }

    #[test]
    fn tv_tiny_lambda_returns_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = Field::image(
            10,
            10,
            (0..100).map(|_| rng.random_range(0.0..100.0)).collect(),
        )
        .unwrap();
        let out = tv_denoise(&f, 1e-8, 100).unwrap();
        let max_diff = out
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_diff <= 1e-4);
    }

    #[test]
    fn tv_flattens_noisy_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let clean: Vec<f64> = (0..200)
            .map(|k| if k < 100 { 10.0 } else { 30.0 })
            .collect();
        let noisy: Vec<f64> = clean
            .iter()
            .map(|c| c + rng.random_range(-1.0..1.0))
            .collect();
        let f = Field::signal(noisy).unwrap();
        let out = tv_denoise(&f, 2.0, 500).unwrap();
        assert!(total_variation(&out) < total_variation(&f));
        let plateau_var = |v: &[f64]| {
            let s = &v[10..90];
            let m = s.iter().sum::<f64>() / s.len() as f64;
            s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / s.len() as f64
        };
        assert!(plateau_var(out.values()) * 10.0 <= plateau_var(f.values()));
    }

    #[test]
    fn tv_objective_monotone_and_converged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = Field::image(
            24,
            24,
            (0..576).map(|_| rng.random_range(0.0..50.0)).collect(),
        )
        .unwrap();
        let lambda = 8.0;
        let short = tv_denoise_traced(&f, lambda, 300).unwrap();
        assert!(short.objective.windows(2).all(|w| w[1] <= w[0]));
        let long = tv_denoise_traced(&f, lambda, 3000).unwrap();
        let (a, b) = (
            short.objective.last().unwrap(),
            long.objective.last().unwrap(),
        );
        assert!((a - b).abs() <= 1e-4 * b, "{a} vs {b}");
    }

    #[test]
    fn tv_is_jointly_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = Field::signal((0..120).map(|_| rng.random_range(0.0..10.0)).collect()).unwrap();
        let c = 3.7;
        let scaled = f
            .with_values(f.values().iter().map(|v| c * v).collect())
            .unwrap();
        let a = tv_denoise(&f, 1.5, 200).unwrap();
        let b = tv_denoise(&scaled, 1.5 * c, 200).unwrap();
        let expect: Vec<f64> = a.values().iter().map(|v| c * v).collect();
        assert!(rel(b.values(), &expect) <= 1e-6);
    }

    #[test]
    fn fourier_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = Field::image(7, 5, (0..35).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let y = Field::image(7, 5, (0..35).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let p = ThresholdProfile::new(6, 4.5).unwrap();
        let combo = x
            .with_values(
                x.values()
                    .iter()
                    .zip(y.values())
                    .map(|(a, b)| 2.0 * a - 0.5 * b)
                    .collect(),
            )
            .unwrap();
        let lhs = fourier_denoise(&combo, &p).unwrap();
        let (fx, fy) = (
            fourier_denoise(&x, &p).unwrap(),
            fourier_denoise(&y, &p).unwrap(),
        );
        let rhs: Vec<f64> = fx
            .values()
            .iter()
            .zip(fy.values())
            .map(|(a, b)| 2.0 * a - 0.5 * b)
            .collect();
        assert!(rel(lhs.values(), &rhs) < 1e-10);
    }

    #[test]
    fn rejects_bad_tv_parameters() {
        let f = Field::signal(vec![1.0; 5]).unwrap();
        assert!(tv_denoise(&f, 0.0, 10).is_err());
        assert!(tv_denoise(&f, 1.0, 0).is_err());
    }
}
