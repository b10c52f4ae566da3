//! Seeded, sharded path simulation and the estimators built on it.
//!
//! Paths are simulated in fixed-size blocks. Block `b` draws from the
//! ChaCha8 stream `b` of the master seed, blocks are distributed over a
//! pool of `shards` threads, and block results are merged in block order.
//! Reports therefore depend on `(seed, n_paths)` only, never on the shard
//! count or on scheduling.

mod bigjump;
mod crude;
mod renewal;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bigjump::{
    bigjump_conditional_ratio, bigjump_records, estimate_bigjump_sum, exceedance_time_profile, BigJumpRecord,
    ProfileRow,
};
pub use crude::{crude_slack, estimate_finite_tail_crude, estimate_stopped_tail_crude, estimate_tail_crude};
pub use renewal::{renewal_diagnostics, renewal_drift, RenewalRow, RENEWAL_REMAINDER};

/// Paths per block; part of the reproducibility contract.
pub const BLOCK_SIZE: u64 = 4096;
/// Share of paths allowed to hit the horizon cap before an estimator
/// refuses.
pub const HORIZON_REFUSAL_SHARE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: u64,
    pub seed: u64,
    pub shards: usize,
    /// Override of the crude-MC truncation slack `K`; derived from the
    /// tail certificate when absent.
    pub slack: Option<f64>,
    /// Step cap per path.
    pub horizon_cap: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_paths: 100_000,
            seed: 0,
            shards: 1,
            slack: None,
            horizon_cap: 1_000_000,
        }
    }
}

impl SimConfig {
    pub fn new(n_paths: u64, seed: u64) -> Self {
        SimConfig {
            n_paths,
            seed,
            ..SimConfig::default()
        }
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Param {
                name: "n_paths",
                reason: "must be ≥ 1".into(),
            });
        }
        if self.shards == 0 {
            return Err(Error::Param {
                name: "shards",
                reason: "must be ≥ 1".into(),
            });
        }
        if self.horizon_cap == 0 {
            return Err(Error::Param {
                name: "horizon_cap",
                reason: "must be ≥ 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub method: String,
    pub model: String,
    pub x: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// Certified bound on the deterministic bias, separate from `stderr`.
    pub bias_bound: f64,
    pub n_paths: u64,
    /// Samples behind the estimate (the conditioning count for ratios).
    pub n_effective: u64,
    /// Paths stopped by the horizon cap.
    pub horizon_hits: u64,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl EstimatorReport {
    /// `(estimate − exact)/stderr`; zero when both the error and the
    /// standard error vanish.
    pub fn z_score(&self, exact: f64) -> f64 {
        let diff = self.estimate - exact;
        if self.stderr == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            }
        } else {
            diff / self.stderr
        }
    }
}

/// Running first and second moments.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Runs `block(rng, paths)` over all blocks of `cfg` on a pool of
/// `cfg.shards` threads and returns the block results in block order.
pub(crate) fn run_blocks<T, F>(cfg: &SimConfig, block: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    cfg.validate()?;
    let blocks = cfg.n_paths.div_ceil(BLOCK_SIZE);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.shards)
        .build()
        .map_err(|e| Error::Param {
            name: "shards",
            reason: e.to_string(),
        })?;
    Ok(pool.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(b);
                let paths = BLOCK_SIZE.min(cfg.n_paths - b * BLOCK_SIZE);
                block(&mut rng, paths)
            })
            .collect()
    }))
}

pub(crate) fn check_horizon(hits: u64, n_paths: u64) -> Result<()> {
    if hits as f64 > HORIZON_REFUSAL_SHARE * n_paths as f64 {
        return Err(Error::Refused(format!(
            "{hits} of {n_paths} paths reached the horizon cap undecided (limit {:.1}%)",
            100.0 * HORIZON_REFUSAL_SHARE
        )));
    }
    Ok(())
}
