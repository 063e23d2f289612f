//! PSNR and SSIM.
//!
//! SSIM uses the standard settings: an 11×11 Gaussian window with σ = 1.5,
//! `C₁ = (0.01·L)²`, `C₂ = (0.03·L)²`, averaged over the valid region
//! (windows fully inside the image, no padding).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, FieldKind};

pub use crate::noise::snr_db;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Dynamic range `L` used by PSNR and SSIM.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Peak {
    /// The maximum of the clean reference.
    #[default]
    Auto,
    Value(f64),
}

impl Peak {
    pub fn resolve(self, clean: &Field) -> Result<f64> {
        let peak = match self {
            Peak::Auto => clean.max(),
            Peak::Value(v) => v,
        };
        if peak.is_finite() && peak > 0.0 {
            Ok(peak)
        } else {
            Err(Error::InvalidParameter(format!(
                "peak must be positive, got {peak}"
            )))
        }
    }
}

fn check_shapes(clean: &Field, test: &Field) -> Result<()> {
    if clean.same_shape(test) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: clean.len(),
            actual: test.len(),
        })
    }
}

pub fn mse(clean: &Field, test: &Field) -> Result<f64> {
    check_shapes(clean, test)?;
    let sum: f64 = clean
        .values()
        .iter()
        .zip(test.values())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(sum / clean.len() as f64)
}

/// `10·log₁₀(L² / MSE)`; `+∞` for identical fields.
pub fn psnr_db(clean: &Field, test: &Field, peak: Peak) -> Result<f64> {
    let err = mse(clean, test)?;
    let peak = peak.resolve(clean)?;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / err).log10())
}

fn ssim_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as i32;
    let mut w: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

// Separable valid-region filtering of a w×h image.
fn filter_valid(values: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let (ow, oh) = (w + 1 - k, h + 1 - k);
    let mut horiz = vec![0.0; ow * h];
    for r in 0..h {
        let row = &values[r * w..(r + 1) * w];
        for c in 0..ow {
            horiz[r * ow + c] = kernel.iter().zip(&row[c..c + k]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = kernel
                .iter()
                .enumerate()
                .map(|(j, a)| a * horiz[(r + j) * ow + c])
                .sum();
        }
    }
    out
}

/// Mean structural similarity in `[−1, 1]`.
pub fn ssim(clean: &Field, test: &Field, peak: Peak) -> Result<f64> {
    check_shapes(clean, test)?;
    if clean.kind() != FieldKind::Image2D {
        return Err(Error::UndefinedMetric(
            "SSIM is defined for images only".into(),
        ));
    }
    let (w, h) = (clean.width(), clean.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::UndefinedMetric(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let peak = peak.resolve(clean)?;
    let c1 = (SSIM_K1 * peak).powi(2);
    let c2 = (SSIM_K2 * peak).powi(2);
    let kernel = ssim_window();
    let (x, y) = (clean.values(), test.values());
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mu_x = filter_valid(x, w, h, &kernel);
    let mu_y = filter_valid(y, w, h, &kernel);
    let e_xx = filter_valid(&xx, w, h, &kernel);
    let e_yy = filter_valid(&yy, w, h, &kernel);
    let e_xy = filter_valid(&xy, w, h, &kernel);
    let n = mu_x.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = e_xx[i] - mx * mx;
            let vy = e_yy[i] - my * my;
            let cxy = e_xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / n as f64)
}
