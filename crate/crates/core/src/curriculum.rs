//! Multi-curriculum batch scheduling.
//!
//! Each data part is ranked from easy to hard by a per-sample difficulty
//! score. A staircase pacing function exposes a growing prefix of every
//! ranked part, and every iteration draws a fixed-size batch from each
//! part's current prefix. The per-part batches are concatenated in part
//! order.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPart {
    pub part_id: String,
    /// Difficulty of each sample (lower is easier).
    pub difficulty: Vec<f64>,
}

impl DataPart {
    pub fn new(part_id: impl Into<String>, difficulty: Vec<f64>) -> Result<Self> {
        let part = Self { part_id: part_id.into(), difficulty };
        part.validate()?;
        Ok(part)
    }

    pub fn n_samples(&self) -> usize {
        self.difficulty.len()
    }

    fn validate(&self) -> Result<()> {
        if self.difficulty.is_empty() {
            return Err(Error::Config(format!("part '{}' is empty", self.part_id)));
        }
        if self.difficulty.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config(format!("part '{}' has non-finite scores", self.part_id)));
        }
        Ok(())
    }

    /// The same part with negated scores, i.e. ranked hard to easy.
    pub fn reversed(&self) -> Self {
        Self { part_id: self.part_id.clone(), difficulty: self.difficulty.iter().map(|s| -s).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumConfig {
    /// Starting fraction per part, in `(0, 1]`.
    pub p: Vec<f64>,
    /// Iterations per pacing step.
    pub step_length: usize,
    pub batch_per_part: usize,
    pub total_iterations: usize,
    pub seed: u64,
}

/// Size of the ranked prefix exposed at step `k`:
/// `floor(min(p * (k + 1), 1) * n)`, at least 1.
pub fn pacing(k: usize, p: f64, n: usize) -> usize {
    let frac = (p * (k as f64 + 1.0)).min(1.0);
    // guards products like 0.29 * 100 = 28.999999999999996
    let size = (frac * n as f64 * (1.0 + 4.0 * f64::EPSILON)).floor() as usize;
    size.clamp(1, n)
}

/// Stable ascending order of the part's samples by difficulty.
pub fn rank_part(part: &DataPart) -> Vec<usize> {
    let mut order: Vec<usize> = (0..part.n_samples()).collect();
    order.sort_by(|&a, &b| part.difficulty[a].total_cmp(&part.difficulty[b]));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleIteration {
    pub iter: usize,
    pub step: usize,
    pub subset_sizes: Vec<usize>,
    /// Original sample indices drawn from each part, in part order.
    pub batch: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSchedule {
    pub iterations: Vec<ScheduleIteration>,
    /// Ranked order of every part.
    pub ranking: Vec<Vec<usize>>,
}

pub fn build_schedule(parts: &[DataPart], cfg: &CurriculumConfig) -> Result<BatchSchedule> {
    if parts.is_empty() {
        return Err(Error::Config("no data parts".into()));
    }
    if cfg.p.len() != parts.len() {
        return Err(Error::Config(format!("{} starting fractions for {} parts", cfg.p.len(), parts.len())));
    }
    if cfg.step_length == 0 || cfg.batch_per_part == 0 || cfg.total_iterations == 0 {
        return Err(Error::Config("step length, batch size and iteration count must be positive".into()));
    }
    for (part, &p) in parts.iter().zip(&cfg.p) {
        part.validate()?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Config(format!("starting fraction {p} for part '{}' not in (0, 1]", part.part_id)));
        }
        let first = pacing(0, p, part.n_samples());
        if cfg.batch_per_part > first {
            return Err(Error::Config(format!(
                "batch of {} exceeds the initial subset of {first} for part '{}'",
                cfg.batch_per_part, part.part_id
            )));
        }
    }

    let ranking: Vec<Vec<usize>> = parts.iter().map(rank_part).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut iterations = Vec::with_capacity(cfg.total_iterations);
    for iter in 0..cfg.total_iterations {
        let step = iter / cfg.step_length;
        let subset_sizes: Vec<usize> =
            parts.iter().zip(&cfg.p).map(|(part, &p)| pacing(step, p, part.n_samples())).collect();
        let batch = ranking
            .iter()
            .zip(&subset_sizes)
            .map(|(order, &size)| {
                index::sample(&mut rng, size, cfg.batch_per_part).into_iter().map(|r| order[r]).collect()
            })
            .collect();
        iterations.push(ScheduleIteration { iter, step, subset_sizes, batch });
    }
    Ok(BatchSchedule { iterations, ranking })
}
