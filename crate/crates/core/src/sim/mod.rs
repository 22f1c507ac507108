//! Monte-Carlo oracle for the analytic results.
//!
//! Two kinds of runs are provided:
//!
//! * hitting-time runs of the birth-death walk, one independent trajectory
//!   per replication, stopped on first entry into `M + 1`;
//! * long stationary runs, either of the explicit FCFS multi-server system
//!   ([`simulate_stationary`]) or of the bare occupation jump process
//!   ([`simulate_occupancy`]), summarized with batch means.
//!
//! Every replication owns a random stream keyed by `(seed, replication)`
//! and results are merged in replication order, so estimates are
//! bit-identical for any thread count.

mod batch;
mod hitting;
mod queue;
mod stream;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

pub use hitting::{simulate_hitting_time, simulate_mean_hitting_time};
pub use queue::{simulate_occupancy, simulate_stationary, StationaryEstimates};
pub use stream::Stream;

pub const DEFAULT_BATCHES: u32 = 20;

/// How an arriving call picks among idle ambulances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentPolicy {
    /// Uniformly at random.
    #[default]
    Random,
    /// The idle ambulance with the smallest index.
    LowestIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub replications: u32,
    /// Minutes discarded before statistics are collected.
    pub warmup: f64,
    /// End of each stationary run, minutes. Hitting-time runs treat it as a
    /// per-replication cap.
    pub horizon: f64,
    /// Initial occupation.
    pub start_state: u64,
    #[serde(default = "default_batches")]
    pub batches: u32,
    #[serde(default)]
    pub policy: AssignmentPolicy,
    /// Record every conditional wait for export.
    #[serde(default)]
    pub keep_waits: bool,
    /// Worker threads; `None` uses the global pool. Never affects results.
    #[serde(skip)]
    pub threads: Option<usize>,
}

fn default_batches() -> u32 {
    DEFAULT_BATCHES
}

impl SimConfig {
    /// Warmup `50·max(T_C, T_S)`; horizon long enough for about 2·10⁴
    /// arrivals after warmup.
    pub fn for_params(params: &SystemParams, seed: u64) -> Self {
        let warmup = 50.0 * params.t_call().max(params.t_service());
        Self {
            seed,
            replications: 1,
            warmup,
            horizon: warmup + 2e4 * params.t_call(),
            start_state: 0,
            batches: DEFAULT_BATCHES,
            policy: AssignmentPolicy::Random,
            keep_waits: false,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, value, reason| {
            Err(Error::InvalidParameter {
                field,
                value,
                reason,
            })
        };
        if self.replications == 0 {
            return bad("replications", 0.0, "must be at least 1");
        }
        if !(self.warmup >= 0.0 && self.warmup.is_finite()) {
            return bad("warmup", self.warmup, "must be non-negative");
        }
        if !(self.horizon > self.warmup) || self.horizon.is_nan() {
            return bad("horizon", self.horizon, "must exceed warmup");
        }
        if self.batches < 2 {
            return bad(
                "batches",
                f64::from(self.batches),
                "need at least 2 batches",
            );
        }
        if self.threads == Some(0) {
            return bad("threads", 0.0, "must be at least 1");
        }
        Ok(())
    }

    /// Maps `job` over `0..count` in parallel, preserving index order.
    fn run<T, F>(&self, count: u64, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        let work = || (0..count).into_par_iter().map(&job).collect::<Vec<T>>();
        match self.threads {
            Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(work),
                Err(_) => work(),
            },
            None => work(),
        }
    }
}

/// A Monte-Carlo point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub value: f64,
    pub std_error: f64,
    /// 95% normal half-width, `1.96·std_error`.
    pub half_width: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl SimEstimate {
    /// Sample mean and standard error of the mean. A single sample gets a
    /// zero standard error.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                value: f64::NAN,
                std_error: f64::NAN,
                half_width: f64::NAN,
                n_samples: 0,
                seed,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            value: mean,
            std_error,
            half_width: 1.96 * std_error,
            n_samples: n as u64,
            seed,
        }
    }

    /// `(value − expected)/std_error`.
    pub fn z_score(&self, expected: f64) -> f64 {
        (self.value - expected) / self.std_error
    }

    /// `|value − expected| ≤ k·std_error`.
    pub fn covers(&self, expected: f64, k: f64) -> bool {
        (self.value - expected).abs() <= k * self.std_error
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_samples() {
        let e = SimEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0], 9);
        assert_eq!(e.value, 2.5);
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(e.n_samples, 4);
        assert_eq!(e.seed, 9);
        assert!(e.covers(2.5, 0.0));
        assert_eq!(SimEstimate::from_samples(&[3.0], 0).std_error, 0.0);
        assert_eq!(SimEstimate::from_samples(&[], 0).n_samples, 0);
    }

    #[test]
    fn config_validation() {
        let p = SystemParams::new(15.0, 50.0, 6).unwrap();
        let base = SimConfig::for_params(&p, 1);
        assert!(base.validate().is_ok());
        assert_eq!(base.warmup, 2500.0);
        let cases: [fn(&mut SimConfig); 6] = [
            |c| c.replications = 0,
            |c| c.horizon = c.warmup,
            |c| c.warmup = -1.0,
            |c| c.batches = 1,
            |c| c.threads = Some(0),
            |c| c.horizon = f64::NAN,
        ];
        for mutate in cases {
            let mut c = base.clone();
            mutate(&mut c);
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
