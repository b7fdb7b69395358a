//! Constrained triplet sampling and virtual normals.
//!
//! A triplet `(A, B, C)` is accepted when the angles at `A` (between `AB` and
//! `AC`) and at `B` (between `BC` and `BA`) both lie in `[beta, alpha]`, and
//! all three pairwise distances exceed `theta`. The plane through an accepted
//! triplet has a well-defined unit normal `AB x AC / |AB x AC|`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

/// Cross products shorter than this are treated as degenerate.
pub const DEGENERATE_CROSS_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConstraints {
    /// Maximum triangle angle, degrees.
    pub alpha: f64,
    /// Minimum triangle angle, degrees.
    pub beta: f64,
    /// Minimum pairwise distance, in cloud units.
    pub theta: f64,
    pub n_samples: usize,
    pub max_attempt_factor: usize,
    pub seed: u64,
}

impl Default for SamplingConstraints {
    fn default() -> Self {
        Self {
            alpha: 170.0,
            beta: 10.0,
            theta: 0.1,
            n_samples: 100_000,
            max_attempt_factor: 20,
            seed: 0,
        }
    }
}

impl SamplingConstraints {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.beta && self.beta < self.alpha && self.alpha <= 180.0) {
            return Err(Error::InvalidParameter(format!(
                "angles must satisfy 0 < beta < alpha <= 180 (beta={}, alpha={})",
                self.beta, self.alpha
            )));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {}", self.theta)));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be positive".into()));
        }
        if self.max_attempt_factor == 0 {
            return Err(Error::InvalidParameter("max_attempt_factor must be positive".into()));
        }
        Ok(())
    }

    /// Same constraints with every distance threshold multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { theta: self.theta * s, ..*self }
    }

    /// True when `(a, b, c)` passes both the angle and the distance test.
    pub fn accepts(&self, a: &Point3, b: &Point3, c: &Point3) -> bool {
        let ab = b - a;
        let ac = c - a;
        let bc = c - b;
        if ab.norm() <= self.theta || ac.norm() <= self.theta || bc.norm() <= self.theta {
            return false;
        }
        let in_range = |deg: f64| deg >= self.beta && deg <= self.alpha;
        in_range(angle_deg(&ab, &ac)) && in_range(angle_deg(&bc, &(-ab)))
    }
}

/// Angle between two vectors in degrees; NaN when either is zero.
pub fn angle_deg(a: &Point3, b: &Point3) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return f64::NAN;
    }
    (a.dot(b) / denom).clamp(-1.0, 1.0).acos().to_degrees()
}

pub type Triplet = [usize; 3];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TripletSet {
    /// `(A, B, C)` indices into the sampled cloud, in acceptance order.
    pub triplets: Vec<Triplet>,
}

impl TripletSet {
    pub fn count(&self) -> usize {
        self.triplets.len()
    }
}

/// Rejection-samples `c.n_samples` triplets. Candidates are drawn uniformly
/// (with a dedicated seeded stream) and kept in the order they are accepted.
pub fn sample_triplets(cloud: &PointCloud, c: &SamplingConstraints) -> Result<TripletSet> {
    c.validate()?;
    let n = cloud.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 points, got {n}")));
    }
    let budget = c.n_samples.saturating_mul(c.max_attempt_factor);
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut triplets = Vec::with_capacity(c.n_samples);
    let mut attempts = 0;
    while triplets.len() < c.n_samples && attempts < budget {
        attempts += 1;
        let t = [rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n)];
        if t[0] == t[1] || t[0] == t[2] || t[1] == t[2] {
            continue;
        }
        let p = &cloud.points;
        if c.accepts(&p[t[0]], &p[t[1]], &p[t[2]]) {
            triplets.push(t);
        }
    }
    if triplets.len() < c.n_samples {
        return Err(Error::InsufficientSamples {
            requested: c.n_samples,
            accepted: triplets.len(),
            attempts,
            rate: triplets.len() as f64 / attempts.max(1) as f64,
        });
    }
    Ok(TripletSet { triplets })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalSet {
    /// Unit normals; zero where `valid` is false.
    pub normals: Vec<Point3>,
    pub valid: Vec<bool>,
}

impl NormalSet {
    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }
}

/// Unit normal of the plane through `a, b, c`, or `None` when degenerate.
#[inline]
pub fn plane_normal(a: &Point3, b: &Point3, c: &Point3) -> Option<Point3> {
    let cross = (b - a).cross(&(c - a));
    let norm = cross.norm();
    (norm >= DEGENERATE_CROSS_NORM && norm.is_finite()).then(|| cross / norm)
}

pub fn virtual_normals(cloud: &PointCloud, t: &TripletSet) -> Result<NormalSet> {
    let n = cloud.len();
    let mut normals = Vec::with_capacity(t.count());
    let mut valid = Vec::with_capacity(t.count());
    for (i, tri) in t.triplets.iter().enumerate() {
        if tri.iter().any(|&k| k >= n) {
            return Err(Error::InvalidParameter(format!(
                "triplet {i} references index out of range for {n} points"
            )));
        }
        let p = &cloud.points;
        match plane_normal(&p[tri[0]], &p[tri[1]], &p[tri[2]]) {
            Some(nrm) => {
                normals.push(nrm);
                valid.push(true);
            }
            None => {
                normals.push(Point3::zeros());
                valid.push(false);
            }
        }
    }
    Ok(NormalSet { normals, valid })
}
