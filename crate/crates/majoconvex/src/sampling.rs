//! Sampling plans: the seed, count, and box every sampled verdict runs on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// A reproducible sampling request: a seed, a sample count, and a
/// per-coordinate box. The box both scopes the check and documents it —
/// every verdict echoes the plan it ran under.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub seed: u64,
    pub sample_count: usize,
    /// Per-coordinate closed intervals [lo, hi].
    pub intervals: Vec<(f64, f64)>,
}

impl SamplingPlan {
    pub fn new(seed: u64, sample_count: usize, intervals: Vec<(f64, f64)>) -> Result<Self> {
        if sample_count == 0 {
            return Err(Error::invalid("sample_count must be at least 1"));
        }
        if intervals.is_empty() {
            return Err(Error::invalid("box must have at least one coordinate"));
        }
        for &(lo, hi) in &intervals {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid(format!("empty or non-finite interval [{lo}, {hi}]")));
            }
        }
        Ok(SamplingPlan {
            seed,
            sample_count,
            intervals,
        })
    }

    /// Cube [lo, hi]^n.
    pub fn cube(seed: u64, sample_count: usize, n: usize, lo: f64, hi: f64) -> Result<Self> {
        SamplingPlan::new(seed, sample_count, vec![(lo, hi); n])
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn stream(&self) -> SeedStream {
        SeedStream::new(self.seed)
    }

    /// True when the box is invariant under coordinate permutation, which
    /// symmetry-based checks require.
    pub fn is_symmetric_box(&self) -> bool {
        self.intervals
            .iter()
            .all(|&iv| iv == self.intervals[0])
    }

    pub fn is_positive_box(&self) -> bool {
        self.intervals.iter().all(|&(lo, _)| lo > 0.0)
    }

    /// One uniform draw from the box.
    pub fn sample(&self, stream: &mut SeedStream) -> Vec<f64> {
        self.intervals
            .iter()
            .map(|&(lo, hi)| stream.uniform_in(lo, hi))
            .collect()
    }

    /// One log-uniform draw; requires a positive box. Scale parameters
    /// (singular values, stretches) are sampled this way so that large
    /// ratios between coordinates are exercised.
    pub fn sample_log(&self, stream: &mut SeedStream) -> Result<Vec<f64>> {
        if !self.is_positive_box() {
            return Err(Error::invalid("log-uniform sampling needs a positive box"));
        }
        Ok(self
            .intervals
            .iter()
            .map(|&(lo, hi)| {
                if lo == hi {
                    lo
                } else {
                    stream.log_uniform_in(lo, hi)
                }
            })
            .collect())
    }
}
