//! Quality filtering of stereo flow fields.
//!
//! Pixels are dropped when the vertical flow is too large or when the
//! left-to-right and right-to-left horizontal flows disagree; an image is
//! kept only if enough pixels survive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::pfm::PfmImage;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    /// Horizontal displacement per pixel.
    pub dx: Vec<f64>,
    /// Vertical displacement per pixel.
    pub dy: Vec<f64>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, dx: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if dx.len() != width * height || dy.len() != width * height {
            return Err(Error::DimensionMismatch(format!("flow components do not match {width}x{height}")));
        }
        Ok(Self { width, height, dx, dy })
    }

    /// Reads the first two channels of a three-channel PFM as `(dx, dy)`.
    pub fn from_pfm(image: &PfmImage) -> Result<Self> {
        if image.channels != 3 {
            return Err(Error::UnsupportedFormat("flow fields need three-channel PF".into()));
        }
        let dx = image.data.chunks_exact(3).map(|c| f64::from(c[0])).collect();
        let dy = image.data.chunks_exact(3).map(|c| f64::from(c[1])).collect();
        Self::new(image.width, image.height, dx, dy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisparityPair {
    pub left_to_right: FlowField,
    pub right_to_left: FlowField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisparityFilterConfig {
    pub max_vertical: f64,
    pub max_lr_difference: f64,
    /// Images need at least this percentage of valid pixels.
    pub min_valid_percent: u32,
}

impl Default for DisparityFilterConfig {
    fn default() -> Self {
        Self { max_vertical: 5.0, max_lr_difference: 2.0, min_valid_percent: 30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisparityFilterResult {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
    pub valid_fraction: f64,
    pub keep: bool,
}

pub fn disparity_filter(pair: &DisparityPair) -> Result<DisparityFilterResult> {
    disparity_filter_with(pair, &DisparityFilterConfig::default())
}

pub fn disparity_filter_with(pair: &DisparityPair, cfg: &DisparityFilterConfig) -> Result<DisparityFilterResult> {
    let (lr, rl) = (&pair.left_to_right, &pair.right_to_left);
    if lr.width != rl.width || lr.height != rl.height {
        return Err(Error::DimensionMismatch(format!(
            "left-right flow {}x{} vs right-left {}x{}",
            lr.width, lr.height, rl.width, rl.height
        )));
    }
    let (w, h) = (lr.width, lr.height);
    let mask: Vec<bool> = (0..w * h)
        .map(|k| {
            let (dx, dy) = (lr.dx[k], lr.dy[k]);
            if !(dx.is_finite() && dy.is_finite()) || dy.abs() > cfg.max_vertical {
                return false;
            }
            let tu = ((k % w) as f64 + dx).round();
            let tv = ((k / w) as f64 + dy).round();
            if tu < 0.0 || tv < 0.0 || tu >= w as f64 || tv >= h as f64 {
                return false;
            }
            let back = rl.dx[tv as usize * w + tu as usize];
            (dx + back).abs() <= cfg.max_lr_difference
        })
        .collect();
    let valid = mask.iter().filter(|&&m| m).count();
    let total = mask.len();
    Ok(DisparityFilterResult {
        width: w,
        height: h,
        valid_fraction: valid as f64 / total.max(1) as f64,
        keep: total > 0 && valid * 100 >= cfg.min_valid_percent as usize * total,
        mask,
    })
}
