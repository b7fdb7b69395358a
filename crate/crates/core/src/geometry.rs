//! Pinhole camera, depth maps and back-projection.
//!
//! The camera frame is the world frame. A pixel `(u, v)` with depth `d` maps
//! to `P = d * ((u - u0) / fx, (v - v0) / fy, 1)`, so `z` is the depth itself.
//! Pixel `u` is the column and `v` the row; flat indices are row-major.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub u0: f64,
    pub v0: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, u0: f64, v0: f64) -> Result<Self> {
        let cam = Self { fx, fy, u0, v0 };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "focal lengths must be positive and finite (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !self.u0.is_finite() || !self.v0.is_finite() {
            return Err(Error::InvalidParameter("principal point must be finite".into()));
        }
        Ok(())
    }

    /// Ray through pixel `(u, v)` scaled so that its `z` component is 1.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Point3 {
        Point3::new((u - self.u0) / self.fx, (v - self.v0) / self.fy, 1.0)
    }

    /// Ray for a flat row-major pixel index in an image of the given width.
    #[inline]
    pub fn ray_at(&self, index: usize, width: usize) -> Point3 {
        self.ray((index % width) as f64, (index / width) as f64)
    }
}

/// Row-major depth grid. Invalid pixels hold `0.0` and `mask == false`;
/// every valid pixel has a finite depth `> 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
    mask: Vec<bool>,
}

impl DepthMap {
    /// Builds a map whose mask is derived from the data: finite values `> 0`
    /// are valid, everything else is zeroed and marked invalid.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_len(width, height, data.len())?;
        let mut data = data;
        let mask: Vec<bool> = data.iter().map(|&d| d.is_finite() && d > 0.0).collect();
        for (d, &m) in data.iter_mut().zip(&mask) {
            if !m {
                *d = 0.0;
            }
        }
        Ok(Self { width, height, data, mask })
    }

    /// Builds a map with an explicit mask. Masked-off entries are zeroed;
    /// masked-on entries must be finite and positive.
    pub fn with_mask(width: usize, height: usize, data: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        check_len(width, height, data.len())?;
        check_len(width, height, mask.len())?;
        let mut data = data;
        for (i, (d, &m)) in data.iter_mut().zip(&mask).enumerate() {
            if m {
                if !(d.is_finite() && *d > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "valid pixel {i} has non-positive depth {d}"
                    )));
                }
            } else {
                *d = 0.0;
            }
        }
        Ok(Self { width, height, data, mask })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn is_valid(&self, index: usize) -> bool {
        self.mask[index]
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn same_dims(&self, other: &DepthMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Multiplies every valid depth by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {s}")));
        }
        let data = self.data.iter().map(|&d| d * s).collect();
        Self::with_mask(self.width, self.height, data, self.mask.clone())
    }

    /// Copy with one valid pixel replaced; used by finite-difference checks.
    pub fn with_value(&self, index: usize, value: f64) -> Result<Self> {
        let mut data = self.data.clone();
        data[index] = value;
        Self::with_mask(self.width, self.height, data, self.mask.clone())
    }
}

fn check_len(width: usize, height: usize, len: usize) -> Result<()> {
    if width.checked_mul(height) != Some(len) {
        return Err(Error::DimensionMismatch(format!(
            "expected {width}x{height} = {} entries, got {len}",
            width.saturating_mul(height)
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    /// Source flat pixel index of each point, when built from a depth map.
    pub pixel_index: Option<Vec<usize>>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Point3>) -> Self {
        Self { points, pixel_index: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Lifts every valid pixel to 3D. Invalid pixels are omitted.
pub fn back_project(depth: &DepthMap, cam: &CameraIntrinsics) -> Result<PointCloud> {
    cam.validate()?;
    let n = depth.valid_count();
    if n == 0 {
        return Err(Error::EmptyCloud);
    }
    let mut points = Vec::with_capacity(n);
    let mut pixel_index = Vec::with_capacity(n);
    for i in depth.valid_indices() {
        points.push(cam.ray_at(i, depth.width()) * depth.data()[i]);
        pixel_index.push(i);
    }
    Ok(PointCloud { points, pixel_index: Some(pixel_index) })
}

/// Maps every point to `s * (P + t)`.
pub fn transform_cloud(cloud: &PointCloud, s: f64, t: Point3) -> Result<PointCloud> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {s}")));
    }
    Ok(PointCloud {
        points: cloud.points.iter().map(|p| (p + t) * s).collect(),
        pixel_index: cloud.pixel_index.clone(),
    })
}
