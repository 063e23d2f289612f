//! Synthetic test data whose local frequency is anti-correlated with its
//! amplitude: bright regions vary slowly, dark regions oscillate quickly.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Field;

pub const MIN_SIGNAL_LEN: usize = 64;
pub const MIN_IMAGE_SIDE: usize = 32;

const BRIGHT_LEVEL: f64 = 200.0;
const BRIGHT_SWING: f64 = 45.0;
const DARK_LEVEL: f64 = 40.0;
const DARK_SWING: f64 = 25.0;

// Logistic blend from 1 (bright side) to 0 around `edge`.
fn bright_weight(pos: f64, edge: f64, width: f64) -> f64 {
    1.0 / (1.0 + ((pos - edge) / width).exp())
}

/// Bright slowly-varying first half, dark fast-oscillating second half.
///
/// Over the whole signal the slow component completes about 3 cycles and
/// the fast one about 24, each jittered by up to ±5% and given a random
/// phase from `seed`.
pub fn make_signal(n: usize, seed: u64) -> Result<Field> {
    if n < MIN_SIGNAL_LEN {
        return Err(Error::InvalidParameter(format!(
            "synthetic signal needs at least {MIN_SIGNAL_LEN} samples, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slow = 3.0 * rng.random_range(0.95..1.05);
    let fast = 24.0 * rng.random_range(0.95..1.05);
    let (phase_slow, phase_fast) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
    let edge = n as f64 / 2.0;
    let values = (0..n)
        .map(|k| {
            let t = k as f64 / n as f64;
            let bright = BRIGHT_LEVEL + BRIGHT_SWING * (TAU * slow * t + phase_slow).sin();
            let dark = DARK_LEVEL + DARK_SWING * (TAU * fast * t + phase_fast).sin();
            let w = bright_weight(k as f64, edge, n as f64 / 128.0);
            w * bright + (1.0 - w) * dark
        })
        .collect();
    Field::signal(values)
}

/// `n × n` image: bright smooth left half, dark textured right half.
///
/// The bright half varies with a period of about 32 pixels, the dark half
/// with a period of about 5 pixels in both directions.
pub fn make_image(n: usize, seed: u64) -> Result<Field> {
    if n < MIN_IMAGE_SIDE {
        return Err(Error::InvalidParameter(format!(
            "synthetic image needs side at least {MIN_IMAGE_SIDE}, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slow = rng.random_range(0.95..1.05) / 32.0;
    let fast = rng.random_range(0.95..1.05) / 5.0;
    let phases: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
    let edge = n as f64 / 2.0 - 0.5;
    let mut values = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let (x, y) = (c as f64, r as f64);
            let bright = BRIGHT_LEVEL
                + BRIGHT_SWING
                    * (TAU * slow * x + phases[0]).sin()
                    * (TAU * slow * y + phases[1]).cos();
            let dark = DARK_LEVEL
                + DARK_SWING
                    * (TAU * fast * x + phases[2]).sin()
                    * (TAU * fast * y + phases[3]).sin();
            let w = bright_weight(x, edge, 0.75);
            values.push(w * bright + (1.0 - w) * dark);
        }
    }
    Field::image(n, n, values)
}
