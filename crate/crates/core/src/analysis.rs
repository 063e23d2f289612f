//! Small diagnostics used by the experiments and plot data.

/// `Σψ⁴ / (Σψ²)²`; 1 for a delta, `1/n` for a flat vector.
pub fn inverse_participation_ratio(psi: &[f64]) -> f64 {
    let norm2: f64 = psi.iter().map(|x| x * x).sum();
    psi.iter().map(|x| x.powi(4)).sum::<f64>() / (norm2 * norm2)
}

/// Sign changes between consecutive samples whose magnitude exceeds `floor`.
/// Samples at or below the floor are skipped, so round-off noise in
/// evanescent tails is not counted.
pub fn zero_crossings(values: &[f64], floor: f64) -> usize {
    let mut last_sign = 0.0;
    let mut count = 0;
    for &x in values {
        if x.abs() <= floor {
            continue;
        }
        let sign = x.signum();
        if last_sign != 0.0 && sign != last_sign {
            count += 1;
        }
        last_sign = sign;
    }
    count
}

/// `Σ|x_{k+1} − x_k|` along a 1D sequence.
pub fn total_variation_1d(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Zero-crossing count of `values` after removing its mean.
pub fn mean_removed_crossings(values: &[f64]) -> usize {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let centred: Vec<f64> = values.iter().map(|x| x - mean).collect();
    zero_crossings(&centred, 0.0)
}
