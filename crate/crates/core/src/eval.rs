//! Depth alignment and evaluation metrics.

use serde::{Deserialize, Serialize};

use crate::affine::{fit_affine, fit_scale, AffineParams};
use crate::error::{Error, Result};
use crate::geometry::DepthMap;

pub const DEFAULT_WHDR_TAU: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub abs_rel: f64,
    pub log10: f64,
    pub rms: f64,
    pub rms_log: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub n_pixels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMode {
    Affine,
    Scale,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub params: AffineParams,
    /// `params` applied to every valid prediction; results `<= 0` are invalid.
    pub aligned: DepthMap,
    /// Jointly valid pixels dropped because the aligned depth was `<= 0`.
    pub n_nonpositive: usize,
}

fn joint_values(pred: &DepthMap, gt: &DepthMap) -> Result<(Vec<f64>, Vec<f64>)> {
    if !pred.same_dims(gt) {
        return Err(Error::DimensionMismatch(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    Ok((0..pred.len())
        .filter(|&i| pred.is_valid(i) && gt.is_valid(i))
        .map(|i| (pred.data()[i], gt.data()[i]))
        .unzip())
}

/// Least-squares `(s, t)` with `gt ~ s * pred + t` over jointly valid pixels.
pub fn affine_align(pred: &DepthMap, gt: &DepthMap) -> Result<Alignment> {
    align(pred, gt, AlignMode::Affine)
}

pub fn align(pred: &DepthMap, gt: &DepthMap, mode: AlignMode) -> Result<Alignment> {
    let (p, g) = joint_values(pred, gt)?;
    let params = match mode {
        AlignMode::Affine => fit_affine(&p, &g)?,
        AlignMode::Scale => fit_scale(&p, &g)?,
        AlignMode::None => AffineParams::IDENTITY,
    };
    let mut data = Vec::with_capacity(pred.len());
    let mut mask = Vec::with_capacity(pred.len());
    let mut n_nonpositive = 0;
    for i in 0..pred.len() {
        if !pred.is_valid(i) {
            data.push(0.0);
            mask.push(false);
            continue;
        }
        let a = params.apply(pred.data()[i]);
        let ok = a > 0.0 && a.is_finite();
        if !ok && gt.is_valid(i) {
            n_nonpositive += 1;
        }
        data.push(if ok { a } else { 0.0 });
        mask.push(ok);
    }
    let aligned = DepthMap::with_mask(pred.width(), pred.height(), data, mask)?;
    Ok(Alignment { params, aligned, n_nonpositive })
}

/// Standard depth error suite over pixels valid in both maps.
pub fn depth_metrics(pred: &DepthMap, gt: &DepthMap) -> Result<MetricsReport> {
    let (p, g) = joint_values(pred, gt)?;
    depth_metrics_values(&p, &g)
}

/// Same as [`depth_metrics`] on paired positive samples.
pub fn depth_metrics_values(pred: &[f64], gt: &[f64]) -> Result<MetricsReport> {
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} samples", pred.len(), gt.len())));
    }
    if pred.is_empty() {
        return Err(Error::NoUsablePixels("no jointly valid pixels".into()));
    }
    if pred.iter().chain(gt).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("depth metrics need positive finite depths".into()));
    }
    let n = pred.len() as f64;
    let (mut abs_rel, mut log10, mut sq, mut sq_log) = (0.0, 0.0, 0.0, 0.0);
    let mut within = [0usize; 3];
    for (&d, &t) in pred.iter().zip(gt) {
        abs_rel += (d - t).abs() / t;
        let dl = d.log10() - t.log10();
        log10 += dl.abs();
        sq += (d - t) * (d - t);
        sq_log += dl * dl;
        let ratio = (d / t).max(t / d);
        for (k, count) in within.iter_mut().enumerate() {
            if ratio < 1.25f64.powi(k as i32 + 1) {
                *count += 1;
            }
        }
    }
    Ok(MetricsReport {
        abs_rel: abs_rel / n,
        log10: log10 / n,
        rms: (sq / n).sqrt(),
        rms_log: (sq_log / n).sqrt(),
        delta1: within[0] as f64 / n,
        delta2: within[1] as f64 / n,
        delta3: within[2] as f64 / n,
        n_pixels: pred.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrdinalLabel {
    /// `a` is closer than `b`.
    Closer,
    Further,
    Equal,
}

impl OrdinalLabel {
    pub fn from_symbol(s: &str) -> Option<Self> {
        match s.trim() {
            "<" => Some(Self::Closer),
            ">" => Some(Self::Further),
            "=" => Some(Self::Equal),
            _ => None,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Self::Closer => "<",
            Self::Further => ">",
            Self::Equal => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrdinalPair {
    pub idx_a: usize,
    pub idx_b: usize,
    pub weight: f64,
    pub label: OrdinalLabel,
}

/// Ratio-threshold ordinal label of `a` relative to `b`.
pub fn ordinal_label(depth_a: f64, depth_b: f64, tau: f64) -> OrdinalLabel {
    let r = depth_a / depth_b;
    if r < 1.0 / (1.0 + tau) {
        OrdinalLabel::Closer
    } else if r > 1.0 + tau {
        OrdinalLabel::Further
    } else {
        OrdinalLabel::Equal
    }
}

/// Weighted human disagreement rate of `pred` against labelled pairs.
pub fn whdr(pred: &DepthMap, pairs: &[OrdinalPair], tau: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no ordinal pairs".into()));
    }
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be non-negative, got {tau}")));
    }
    let (mut wrong, mut total) = (0.0, 0.0);
    for (k, p) in pairs.iter().enumerate() {
        if p.idx_a == p.idx_b || p.idx_a >= pred.len() || p.idx_b >= pred.len() {
            return Err(Error::InvalidParameter(format!("pair {k} has invalid indices")));
        }
        if !(pred.is_valid(p.idx_a) && pred.is_valid(p.idx_b)) {
            return Err(Error::InvalidParameter(format!("pair {k} references an invalid pixel")));
        }
        if !(p.weight >= 0.0) {
            return Err(Error::InvalidParameter(format!("pair {k} has negative weight")));
        }
        let label = ordinal_label(pred.data()[p.idx_a], pred.data()[p.idx_b], tau);
        if label != p.label {
            wrong += p.weight;
        }
        total += p.weight;
    }
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("total pair weight is zero".into()));
    }
    Ok(wrong / total)
}
