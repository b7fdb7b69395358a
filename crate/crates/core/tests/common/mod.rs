//! Scene generators and brute-force oracles shared by the integration tests.
//! The oracles re-derive every quantity from its definition and do not call
//! into the code paths they check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use vnlkit::{CameraIntrinsics, DepthMap, Point3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn centered_cam(w: usize, h: usize) -> CameraIntrinsics {
    CameraIntrinsics::new(w as f64, h as f64, (w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0).unwrap()
}

/// Smooth random depth between roughly 2 and 6.
pub fn random_depth(rng: &mut ChaCha8Rng, w: usize, h: usize) -> DepthMap {
    let base = rng.random_range(2.5..4.0);
    let gx = rng.random_range(-0.08..0.08);
    let gy = rng.random_range(-0.08..0.08);
    let (fa, fb) = (rng.random_range(0.2..0.8), rng.random_range(0.2..0.8));
    let amp = rng.random_range(0.1..0.5);
    let data = (0..w * h)
        .map(|k| {
            let (u, v) = ((k % w) as f64, (k / w) as f64);
            base + gx * u + gy * v + amp * (fa * u).sin() * (fb * v).cos()
        })
        .collect();
    DepthMap::new(w, h, data).unwrap()
}

/// Ground truth and a prediction perturbed by up to +-15% per pixel.
pub fn random_pair(seed: u64, w: usize, h: usize) -> (DepthMap, DepthMap) {
    let mut r = rng(seed);
    let gt = random_depth(&mut r, w, h);
    let pred = gt.data().iter().map(|&d| d * (1.0 + r.random_range(-0.15..0.15))).collect();
    (DepthMap::new(w, h, pred).unwrap(), gt)
}

/// Depth of the plane `n . P = c` seen through `cam`: `d = c / (n . K)`.
pub fn plane_depth(cam: &CameraIntrinsics, w: usize, h: usize, normal: Point3, c: f64) -> DepthMap {
    let data = (0..w * h).map(|k| c / normal.dot(&cam.ray_at(k, w))).collect();
    DepthMap::new(w, h, data).unwrap()
}

/// Multiplies each depth by `1 + sigma_rel * N(0, 1)`.
pub fn add_relative_noise(depth: &DepthMap, sigma_rel: f64, seed: u64) -> DepthMap {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, sigma_rel).unwrap();
    let data = depth.data().iter().map(|&d| d * (1.0 + normal.sample(&mut r))).collect();
    DepthMap::new(depth.width(), depth.height(), data).unwrap()
}

// ---- oracles ---------------------------------------------------------------

pub struct MetricsOracle {
    pub abs_rel: f64,
    pub log10: f64,
    pub rms: f64,
    pub rms_log: f64,
    pub delta: [f64; 3],
}

pub fn depth_metrics_oracle(pred: &[f64], gt: &[f64]) -> MetricsOracle {
    let n = pred.len() as f64;
    let mut abs_rel = 0.0;
    let mut log10 = 0.0;
    let mut sq = 0.0;
    let mut sq_log = 0.0;
    let mut delta = [0.0; 3];
    for i in 0..pred.len() {
        let (d, t) = (pred[i], gt[i]);
        abs_rel += (d - t).abs() / t;
        log10 += (d.log10() - t.log10()).abs();
        sq += (d - t) * (d - t);
        sq_log += (d.log10() - t.log10()) * (d.log10() - t.log10());
        let worst = if d / t > t / d { d / t } else { t / d };
        if worst < 1.25 {
            delta[0] += 1.0;
        }
        if worst < 1.25 * 1.25 {
            delta[1] += 1.0;
        }
        if worst < 1.25 * 1.25 * 1.25 {
            delta[2] += 1.0;
        }
    }
    MetricsOracle {
        abs_rel: abs_rel / n,
        log10: log10 / n,
        rms: (sq / n).sqrt(),
        rms_log: (sq_log / n).sqrt(),
        delta: [delta[0] / n, delta[1] / n, delta[2] / n],
    }
}

/// Drops the `floor(fraction * n)` smallest losses by repeatedly removing
/// the current minimum, then averages the rest.
pub fn hem_mean_oracle(losses: &[f64], fraction: f64) -> f64 {
    let mut remaining: Vec<f64> = losses.to_vec();
    let drop = (fraction * losses.len() as f64).floor() as usize;
    for _ in 0..drop {
        let mut min_at = 0;
        for (i, &v) in remaining.iter().enumerate() {
            if v < remaining[min_at] {
                min_at = i;
            }
        }
        remaining.remove(min_at);
    }
    remaining.iter().sum::<f64>() / remaining.len() as f64
}

/// Exact rational arithmetic for the SSI closed form on integer inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ratio(pub i128, pub i128);

impl Ratio {
    pub fn new(n: i128, d: i128) -> Self {
        let g = gcd(n.abs(), d.abs()).max(1);
        let s = if d < 0 { -1 } else { 1 };
        Ratio(s * n / g, s * d / g)
    }
    pub fn add(self, o: Ratio) -> Ratio {
        Ratio::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    pub fn sub(self, o: Ratio) -> Ratio {
        Ratio::new(self.0 * o.1 - o.0 * self.1, self.1 * o.1)
    }
    pub fn mul(self, o: Ratio) -> Ratio {
        Ratio::new(self.0 * o.0, self.1 * o.1)
    }
    pub fn div(self, o: Ratio) -> Ratio {
        Ratio::new(self.0 * o.1, self.1 * o.0)
    }
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `(scale, shift, loss)` of the SSI fit, exactly.
pub fn ssi_oracle(pred: &[i64], gt: &[i64]) -> (Ratio, Ratio, Ratio) {
    let r = |v: i64| Ratio::new(v as i128, 1);
    let n = r(pred.len() as i64);
    let (mut sxx, mut sx, mut sxy, mut sy) = (r(0), r(0), r(0), r(0));
    for (&x, &y) in pred.iter().zip(gt) {
        sxx = sxx.add(r(x * x));
        sx = sx.add(r(x));
        sxy = sxy.add(r(x * y));
        sy = sy.add(r(y));
    }
    let det = n.mul(sxx).sub(sx.mul(sx));
    let scale = n.mul(sxy).sub(sx.mul(sy)).div(det);
    let shift = sxx.mul(sy).sub(sx.mul(sxy)).div(det);
    let mut loss = r(0);
    for (&x, &y) in pred.iter().zip(gt) {
        let res = scale.mul(r(x)).add(shift).sub(r(y));
        loss = loss.add(res.mul(res));
    }
    (scale, shift, loss.div(r(2 * pred.len() as i64)))
}

pub fn angle_deg_oracle(a: &Point3, b: &Point3) -> f64 {
    // atan2 form, identical vectors give exactly 0
    a.cross(b).norm().atan2(a.dot(b)).to_degrees()
}

pub struct NormalMetricsOracle {
    pub mean: f64,
    pub median: f64,
    pub pct: [f64; 3],
}

pub fn normal_metrics_oracle(angles: &[f64]) -> NormalMetricsOracle {
    let n = angles.len();
    let mean = angles.iter().sum::<f64>() / n as f64;
    // selection by counting ranks
    let kth = |k: usize| -> f64 {
        for &a in angles {
            let below = angles.iter().filter(|&&b| b < a).count();
            let equal = angles.iter().filter(|&&b| b == a).count();
            if below <= k && k < below + equal {
                return a;
            }
        }
        unreachable!()
    };
    let median = if n % 2 == 1 { kth(n / 2) } else { 0.5 * (kth(n / 2 - 1) + kth(n / 2)) };
    let pct = [11.2, 22.5, 30.0].map(|t| 100.0 * angles.iter().filter(|&&a| a < t).count() as f64 / n as f64);
    NormalMetricsOracle { mean, median, pct }
}

/// Weighted disagreement, with labels from explicit comparisons of the
/// ratio against the two thresholds.
pub fn whdr_oracle(depth: &[f64], pairs: &[(usize, usize, f64, char)], tau: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(a, b, w, label) in pairs {
        let ratio = depth[a] / depth[b];
        let predicted = if ratio > 1.0 + tau {
            '>'
        } else if ratio < 1.0 / (1.0 + tau) {
            '<'
        } else {
            '='
        };
        if predicted != label {
            num += w;
        }
        den += w;
    }
    num / den
}

/// Plane normal from three non-collinear points, oriented toward the camera.
pub fn analytic_plane_normal(normal: Point3) -> Point3 {
    let n = normal.normalize();
    if n.z > 0.0 {
        -n
    } else {
        n
    }
}
