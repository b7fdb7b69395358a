//! Surface normals from local total-least-squares plane fits, normal-field
//! error metrics and the window-size study.

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthMap, Point3};

/// Angular thresholds (degrees) reported by [`normal_metrics`].
pub const DEFAULT_THRESHOLDS: [f64; 3] = [11.2, 22.5, 30.0];

/// Relative eigenvalue gap below which a neighborhood is treated as a line.
const DEGENERATE_EIGEN_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalField {
    pub width: usize,
    pub height: usize,
    pub normals: Vec<Point3>,
    pub valid: Vec<bool>,
}

impl NormalField {
    /// Builds a field from raw vectors; non-finite or zero-length entries are
    /// marked invalid and the rest normalized.
    pub fn from_vectors(width: usize, height: usize, vectors: Vec<Point3>) -> Result<Self> {
        if vectors.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "expected {} normals, got {}",
                width * height,
                vectors.len()
            )));
        }
        let mut normals = Vec::with_capacity(vectors.len());
        let mut valid = Vec::with_capacity(vectors.len());
        for v in vectors {
            let n = v.norm();
            if n.is_finite() && n > 0.0 {
                normals.push(v / n);
                valid.push(true);
            } else {
                normals.push(Point3::zeros());
                valid.push(false);
            }
        }
        Ok(Self { width, height, normals, valid })
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

/// Total-least-squares plane through `points`: the eigenvector of the
/// smallest eigenvalue of the centered covariance. Returns the unit normal
/// (arbitrary sign) and the centroid, or `None` for fewer than three points
/// or a collinear/coincident set.
pub fn fit_plane(points: &[Point3]) -> Option<(Point3, Point3)> {
    if points.len() < 3 {
        return None;
    }
    let centroid = points.iter().sum::<Point3>() / points.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (mid, max) = (eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
    if !(max > 0.0) || mid <= DEGENERATE_EIGEN_RATIO * max {
        return None;
    }
    let normal = eig.eigenvectors.column(order[0]).into_owned();
    let len = normal.norm();
    len.is_finite().then(|| (normal / len, centroid))
}

/// Per-pixel normals from the valid points of the `(2i+1)^2` window,
/// clipped at the image border, oriented so that `n . centroid < 0`.
pub fn surface_normals(depth: &DepthMap, cam: &CameraIntrinsics, window_halfwidth: usize) -> Result<NormalField> {
    cam.validate()?;
    let (w, h) = (depth.width(), depth.height());
    let i = window_halfwidth;
    if i < 1 || 2 * i >= w.min(h) {
        return Err(Error::InvalidParameter(format!(
            "window half-width {i} must be in [1, {}) for a {w}x{h} map",
            w.min(h).div_ceil(2)
        )));
    }
    let points: Vec<Option<Point3>> = (0..w * h)
        .map(|k| depth.is_valid(k).then(|| cam.ray_at(k, w) * depth.data()[k]))
        .collect();

    let fitted: Vec<Option<Point3>> = (0..w * h)
        .into_par_iter()
        .map(|k| {
            points[k]?;
            let (u, v) = (k % w, k / w);
            let mut window = Vec::with_capacity((2 * i + 1) * (2 * i + 1));
            for vv in v.saturating_sub(i)..=(v + i).min(h - 1) {
                for uu in u.saturating_sub(i)..=(u + i).min(w - 1) {
                    if let Some(p) = points[vv * w + uu] {
                        window.push(p);
                    }
                }
            }
            let (n, centroid) = fit_plane(&window)?;
            let facing = n.dot(&centroid);
            if facing < 0.0 {
                Some(n)
            } else if facing > 0.0 {
                Some(-n)
            } else {
                None
            }
        })
        .collect();

    let valid = fitted.iter().map(Option::is_some).collect();
    let normals = fitted.into_iter().map(|n| n.unwrap_or_else(Point3::zeros)).collect();
    Ok(NormalField { width: w, height: h, normals, valid })
}

/// Angle between two unit vectors in degrees.
#[inline]
pub fn angle_between_deg(a: &Point3, b: &Point3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b)).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalMetrics {
    pub mean_deg: f64,
    pub median_deg: f64,
    pub pct_11_2: f64,
    pub pct_22_5: f64,
    pub pct_30: f64,
    pub n_pixels: usize,
}

/// Median of a non-empty slice; even counts average the two middle values.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn normal_metrics(pred: &NormalField, gt: &NormalField) -> Result<NormalMetrics> {
    normal_metrics_with_thresholds(pred, gt, DEFAULT_THRESHOLDS)
}

pub fn normal_metrics_with_thresholds(
    pred: &NormalField,
    gt: &NormalField,
    thresholds: [f64; 3],
) -> Result<NormalMetrics> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::DimensionMismatch(format!(
            "normal fields {}x{} vs {}x{}",
            pred.width, pred.height, gt.width, gt.height
        )));
    }
    let mut angles: Vec<f64> = (0..pred.normals.len())
        .filter(|&k| pred.valid[k] && gt.valid[k])
        .map(|k| angle_between_deg(&pred.normals[k], &gt.normals[k]))
        .collect();
    if angles.is_empty() {
        return Err(Error::NoUsablePixels("no jointly valid normals".into()));
    }
    let n = angles.len();
    let pct = |t: f64| 100.0 * angles.iter().filter(|&&a| a < t).count() as f64 / n as f64;
    let (pct_11_2, pct_22_5, pct_30) = (pct(thresholds[0]), pct(thresholds[1]), pct(thresholds[2]));
    let mean_deg = angles.iter().sum::<f64>() / n as f64;
    let median_deg = median(&mut angles);
    Ok(NormalMetrics { mean_deg, median_deg, pct_11_2, pct_22_5, pct_30, n_pixels: n })
}

/// Symmetric table of mean angular differences between normal fields fitted
/// with different window half-widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTable {
    pub windows: Vec<usize>,
    /// `mean_deg[a][b]` compares `windows[a]` with `windows[b]`.
    pub mean_deg: Vec<Vec<f64>>,
}

impl WindowTable {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let a = self.windows.iter().position(|&w| w == i)?;
        let b = self.windows.iter().position(|&w| w == j)?;
        Some(self.mean_deg[a][b])
    }
}

pub fn window_study(depth: &DepthMap, cam: &CameraIntrinsics, windows: &[usize]) -> Result<WindowTable> {
    if windows.len() < 2 {
        return Err(Error::InvalidParameter("window study needs at least two windows".into()));
    }
    let fields = windows
        .iter()
        .map(|&i| surface_normals(depth, cam, i))
        .collect::<Result<Vec<_>>>()?;
    let k = windows.len();
    let mut mean_deg = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let m = normal_metrics(&fields[a], &fields[b])?.mean_deg;
            mean_deg[a][b] = m;
            mean_deg[b][a] = m;
        }
    }
    Ok(WindowTable { windows: windows.to_vec(), mean_deg })
}
