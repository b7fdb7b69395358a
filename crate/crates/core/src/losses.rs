//! Geometric and pixel-wise depth losses.
//!
//! The virtual-normal loss compares unit normals of planes spanned by the same
//! point triplets in the predicted and ground-truth clouds. Its gradient with
//! respect to each predicted depth goes through `P_i = d_i * K_i` and the
//! derivative of the normalized cross product. The SSI loss fits a per-image
//! scale and shift in closed form and differentiates at the minimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::{fit_affine, AffineParams};
use crate::error::{Error, Result};
use crate::geometry::{back_project, CameraIntrinsics, DepthMap, Point3, PointCloud};
use crate::sampling::{sample_triplets, SamplingConstraints, TripletSet, DEGENERATE_CROSS_NORM};
use crate::surface_normal::{normal_metrics, surface_normals};

pub const DEFAULT_HEM_FRACTION: f64 = 0.15;
/// Weight of the second term in a two-term combination.
pub const DEFAULT_LAMBDA: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    pub value: f64,
    pub n_terms: usize,
}

/// Per-pixel derivative of a loss with respect to predicted depth.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub grad: Vec<f64>,
}

impl GradientField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, grad: vec![0.0; width * height] }
    }
}

fn check_pair(pred: &DepthMap, gt: &DepthMap) -> Result<()> {
    if !pred.same_dims(gt) {
        return Err(Error::DimensionMismatch(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    Ok(())
}

fn check_shared_mask(pred: &DepthMap, gt: &DepthMap) -> Result<()> {
    check_pair(pred, gt)?;
    if pred.mask() != gt.mask() {
        return Err(Error::DimensionMismatch("prediction and ground truth masks differ".into()));
    }
    Ok(())
}

/// Indices (ascending) of the samples kept after removing the
/// `floor(fraction * n)` lowest losses. Ties are broken by index.
pub fn hem_select(losses: &[f64], fraction: f64) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!("hem fraction must be in [0, 1), got {fraction}")));
    }
    let drop = (fraction * losses.len() as f64).floor() as usize;
    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
    let mut kept = order.split_off(drop);
    kept.sort_unstable();
    Ok(kept)
}

#[inline]
fn l1_sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

struct VnSample {
    loss: f64,
    // d loss / d P for A, B, C (before the 1/N factor)
    grads: [Point3; 3],
}

fn vn_sample(pred: [&Point3; 3], n_gt: &Point3) -> Option<VnSample> {
    let ab = pred[1] - pred[0];
    let ac = pred[2] - pred[0];
    let cross = ab.cross(&ac);
    let norm = cross.norm();
    if !(norm >= DEGENERATE_CROSS_NORM && norm.is_finite()) {
        return None;
    }
    let n = cross / norm;
    let diff = n - n_gt;
    let loss = diff.abs().sum();
    let g_n = diff.map(l1_sign);
    let g_cross = (g_n - n * n.dot(&g_n)) / norm;
    let g_b = ac.cross(&g_cross);
    let g_c = g_cross.cross(&ab);
    Some(VnSample { loss, grads: [-g_b - g_c, g_b, g_c] })
}

/// Virtual-normal loss over triplets sampled on the ground-truth cloud.
pub fn vn_loss(
    pred: &DepthMap,
    gt: &DepthMap,
    cam: &CameraIntrinsics,
    c: &SamplingConstraints,
    hem_fraction: f64,
) -> Result<(LossValue, GradientField)> {
    check_shared_mask(pred, gt)?;
    let gt_cloud = back_project(gt, cam)?;
    let triplets = sample_triplets(&gt_cloud, c)?;
    vn_loss_with_triplets(pred, gt, cam, &triplets, hem_fraction)
}

/// Virtual-normal loss for a fixed set of triplets (indices into the clouds
/// back-projected from the shared mask).
pub fn vn_loss_with_triplets(
    pred: &DepthMap,
    gt: &DepthMap,
    cam: &CameraIntrinsics,
    triplets: &TripletSet,
    hem_fraction: f64,
) -> Result<(LossValue, GradientField)> {
    check_shared_mask(pred, gt)?;
    if !(0.0..1.0).contains(&hem_fraction) {
        return Err(Error::InvalidParameter(format!(
            "hem fraction must be in [0, 1), got {hem_fraction}"
        )));
    }
    let gt_cloud = back_project(gt, cam)?;
    let pred_cloud = back_project(pred, cam)?;
    let n = gt_cloud.len();
    if triplets.triplets.iter().flatten().any(|&k| k >= n) {
        return Err(Error::InvalidParameter("triplet index out of range".into()));
    }

    let samples: Vec<Option<(usize, VnSample)>> = triplets
        .triplets
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let g = &gt_cloud.points;
            let n_gt = crate::sampling::plane_normal(&g[t[0]], &g[t[1]], &g[t[2]])?;
            let p = &pred_cloud.points;
            vn_sample([&p[t[0]], &p[t[1]], &p[t[2]]], &n_gt).map(|s| (i, s))
        })
        .collect();
    let samples: Vec<(usize, VnSample)> = samples.into_iter().flatten().collect();
    if samples.is_empty() {
        return Err(Error::LossUndefined("every sampled triplet is degenerate".into()));
    }

    let losses: Vec<f64> = samples.iter().map(|(_, s)| s.loss).collect();
    let kept = hem_select(&losses, hem_fraction)?;
    let n_kept = kept.len();
    let inv = 1.0 / n_kept as f64;

    let pixel_index = pred_cloud.pixel_index.as_deref().expect("back-projected cloud has pixel indices");
    let mut value = 0.0;
    let mut grad = GradientField::zeros(pred.width(), pred.height());
    for &k in &kept {
        let (i, s) = &samples[k];
        value += s.loss;
        for (slot, g) in triplets.triplets[*i].iter().zip(&s.grads) {
            let px = pixel_index[*slot];
            grad.grad[px] += inv * g.dot(&cam.ray_at(px, pred.width()));
        }
    }
    Ok((LossValue { value: value * inv, n_terms: n_kept }, grad))
}

/// Pairwise direction loss `1 - cos` between matched point pairs.
pub fn pairwise_loss(
    pred: &DepthMap,
    gt: &DepthMap,
    cam: &CameraIntrinsics,
    theta: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<LossValue> {
    check_shared_mask(pred, gt)?;
    if !(theta > 0.0) || n_pairs == 0 {
        return Err(Error::InvalidParameter("theta and n_pairs must be positive".into()));
    }
    let gt_cloud = back_project(gt, cam)?;
    let pred_cloud = back_project(pred, cam)?;
    let pairs = sample_pairs(&gt_cloud, theta, n_pairs, seed)?;
    pairwise_loss_on_pairs(&pred_cloud, &gt_cloud, &pairs)
}

const PAIR_ATTEMPT_FACTOR: usize = 20;

/// Seeded pairs of distinct points whose distance exceeds `theta`.
pub fn sample_pairs(cloud: &PointCloud, theta: f64, n_pairs: usize, seed: u64) -> Result<Vec<[usize; 2]>> {
    let n = cloud.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 points, got {n}")));
    }
    let budget = n_pairs * PAIR_ATTEMPT_FACTOR;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n_pairs);
    let mut attempts = 0;
    while pairs.len() < n_pairs && attempts < budget {
        attempts += 1;
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b && (cloud.points[a] - cloud.points[b]).norm() > theta {
            pairs.push([a, b]);
        }
    }
    if pairs.len() < n_pairs {
        return Err(Error::InsufficientSamples {
            requested: n_pairs,
            accepted: pairs.len(),
            attempts,
            rate: pairs.len() as f64 / attempts.max(1) as f64,
        });
    }
    Ok(pairs)
}

/// A zero-length predicted vector has no direction and counts as cos = 0.
pub fn pairwise_loss_on_pairs(pred: &PointCloud, gt: &PointCloud, pairs: &[[usize; 2]]) -> Result<LossValue> {
    if pairs.is_empty() {
        return Err(Error::LossUndefined("no pairs".into()));
    }
    let mut total = 0.0;
    for &[a, b] in pairs {
        let g = gt.points[b] - gt.points[a];
        let p = pred.points[b] - pred.points[a];
        let denom = g.norm() * p.norm();
        let cos = if denom > 0.0 { (g.dot(&p) / denom).clamp(-1.0, 1.0) } else { 0.0 };
        total += 1.0 - cos;
    }
    Ok(LossValue { value: total / pairs.len() as f64, n_terms: pairs.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsiOutput {
    pub loss: LossValue,
    pub affine: AffineParams,
    /// One entry per input sample.
    pub grad: Vec<f64>,
}

/// Scale-and-shift-invariant loss on paired samples.
pub fn ssi_loss_values(pred: &[f64], gt: &[f64]) -> Result<SsiOutput> {
    let h = fit_affine(pred, gt)?;
    let n = pred.len() as f64;
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(pred.len());
    for (&d, &target) in pred.iter().zip(gt) {
        let r = h.apply(d) - target;
        value += r * r;
        grad.push(r * h.scale / n);
    }
    Ok(SsiOutput {
        loss: LossValue { value: value / (2.0 * n), n_terms: pred.len() },
        affine: h,
        grad,
    })
}

/// SSI loss over pixels valid in both maps.
pub fn ssi_loss(pred: &DepthMap, gt: &DepthMap) -> Result<(LossValue, AffineParams, GradientField)> {
    check_pair(pred, gt)?;
    let idx: Vec<usize> = (0..pred.len()).filter(|&i| pred.is_valid(i) && gt.is_valid(i)).collect();
    let p: Vec<f64> = idx.iter().map(|&i| pred.data()[i]).collect();
    let g: Vec<f64> = idx.iter().map(|&i| gt.data()[i]).collect();
    let out = ssi_loss_values(&p, &g)?;
    let mut field = GradientField::zeros(pred.width(), pred.height());
    for (&i, &gi) in idx.iter().zip(&out.grad) {
        field.grad[i] = gi;
    }
    Ok((out.loss, out.affine, field))
}

/// Mean angular discrepancy (degrees) between surface normals recovered from
/// the two depth maps.
pub fn surface_normal_loss(
    pred: &DepthMap,
    gt: &DepthMap,
    cam: &CameraIntrinsics,
    window_halfwidth: usize,
) -> Result<LossValue> {
    check_pair(pred, gt)?;
    let np = surface_normals(pred, cam, window_halfwidth)?;
    let ng = surface_normals(gt, cam, window_halfwidth)?;
    let m = normal_metrics(&np, &ng)?;
    Ok(LossValue { value: m.mean_deg, n_terms: m.n_pixels })
}

/// Mean absolute depth difference over jointly valid pixels.
pub fn l1_loss(pred: &DepthMap, gt: &DepthMap) -> Result<LossValue> {
    check_pair(pred, gt)?;
    let (mut total, mut n) = (0.0, 0usize);
    for i in 0..pred.len() {
        if pred.is_valid(i) && gt.is_valid(i) {
            total += (pred.data()[i] - gt.data()[i]).abs();
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoUsablePixels("no jointly valid pixels".into()));
    }
    Ok(LossValue { value: total / n as f64, n_terms: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Vn,
    Ssi,
    Pl,
    Snl,
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossComponent {
    pub kind: LossKind,
    pub value: f64,
    pub weight: f64,
}

/// Weighted sum of already evaluated loss terms.
pub fn combined_loss(components: &[LossComponent]) -> Result<LossValue> {
    if components.is_empty() {
        return Err(Error::InvalidParameter("no loss components".into()));
    }
    let value = components.iter().map(|c| c.weight * c.value).sum();
    Ok(LossValue { value, n_terms: components.len() })
}
