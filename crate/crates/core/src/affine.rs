//! Closed-form scale/shift least squares shared by the SSI loss and by
//! depth alignment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized determinants below this make the 2x2 system singular.
pub const SINGULAR_DET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub scale: f64,
    pub shift: f64,
}

impl AffineParams {
    pub const IDENTITY: AffineParams = AffineParams { scale: 1.0, shift: 0.0 };

    #[inline]
    pub fn apply(&self, d: f64) -> f64 {
        self.scale * d + self.shift
    }
}

/// Solves `min_h sum_i (h.0 * x_i + h.1 - y_i)^2` through the 2x2 normal
/// equations, accumulated directly in f64.
///
/// Singularity is judged on the system with `x` divided by its RMS and the
/// rows divided by `n`, whose determinant is `var(x) / mean(x^2)`.
pub fn fit_affine(x: &[f64], y: &[f64]) -> Result<AffineParams> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} samples", x.len(), y.len())));
    }
    let n = x.len() as f64;
    if x.len() < 2 {
        return Err(Error::DegenerateFit(0.0));
    }
    let (mut sxx, mut sx, mut sxy, mut sy) = (0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += xi * xi;
        sx += xi;
        sxy += xi * yi;
        sy += yi;
    }
    let det = n * sxx - sx * sx;
    let normalized = if sxx > 0.0 { det / (n * sxx) } else { 0.0 };
    if !(normalized >= SINGULAR_DET) {
        return Err(Error::DegenerateFit(normalized));
    }
    Ok(AffineParams {
        scale: (n * sxy - sx * sy) / det,
        shift: (sxx * sy - sx * sxy) / det,
    })
}

/// Scale-only fit `min_s sum (s * x_i - y_i)^2`.
pub fn fit_scale(x: &[f64], y: &[f64]) -> Result<AffineParams> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} samples", x.len(), y.len())));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit(0.0));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(AffineParams { scale: sxy / sxx, shift: 0.0 })
}
