use super::{SimConfig, SimEstimate, Stream};
use crate::error::{Error, Result};
use crate::params::{BirthDeath, SystemParams};

// Stream ids: start state in the high bits, replication in the low 32.
fn stream_id(start: u64, replication: u64) -> u64 {
    (start << 32) | replication
}

/// One trajectory of the birth-death walk until it first enters `M + 1`.
/// `None` when the horizon is exceeded.
fn hitting_trajectory(
    params: &SystemParams,
    start: u64,
    cap: f64,
    rng: &mut Stream,
) -> Option<f64> {
    let ladder = params.ladder();
    let target = u64::from(params.servers()) + 1;
    let mut state = start;
    let mut t = 0.0;
    while state < target {
        let up = ladder.up(state);
        let down = if state == 0 { 0.0 } else { ladder.down(state) };
        let total = up + down;
        t += rng.exp(total);
        if t > cap {
            return None;
        }
        if rng.uniform() * total < up {
            state += 1;
        } else {
            state -= 1;
        }
    }
    Some(t)
}

fn check_start(params: &SystemParams, start: u64) -> Result<()> {
    if start > u64::from(params.servers()) {
        return Err(Error::InvalidParameter {
            field: "start_state",
            value: start as f64,
            reason: "must not exceed the fleet size",
        });
    }
    Ok(())
}

fn hitting_samples(params: &SystemParams, start: u64, config: &SimConfig) -> Result<Vec<f64>> {
    let samples = config.run(u64::from(config.replications), |rep| {
        let mut rng = Stream::new(config.seed, stream_id(start, rep));
        hitting_trajectory(params, start, config.horizon, &mut rng).ok_or(rep)
    });
    samples
        .into_iter()
        .map(|r| {
            r.map_err(|replication| Error::HittingCensored {
                replication,
                horizon: config.horizon,
            })
        })
        .collect()
}

/// Mean time to first entry into `M + 1` from `start_state`, over
/// `config.replications` independent walks. `config.start_state` is ignored.
pub fn simulate_hitting_time(
    params: &SystemParams,
    start_state: u64,
    config: &SimConfig,
) -> Result<SimEstimate> {
    config.validate()?;
    check_start(params, start_state)?;
    let samples = hitting_samples(params, start_state, config)?;
    Ok(SimEstimate::from_samples(&samples, config.seed))
}

/// Estimate of `⟨T⟩`: per-start means averaged over `0..=M`, each start
/// with `config.replications` walks.
pub fn simulate_mean_hitting_time(
    params: &SystemParams,
    config: &SimConfig,
) -> Result<SimEstimate> {
    config.validate()?;
    let starts = u64::from(params.servers()) + 1;
    let mut value = 0.0;
    let mut variance = 0.0;
    let mut n_samples = 0;
    for start in 0..starts {
        let est = SimEstimate::from_samples(&hitting_samples(params, start, config)?, config.seed);
        value += est.value;
        variance += est.std_error * est.std_error;
        n_samples += est.n_samples;
    }
    let value = value / starts as f64;
    let std_error = variance.sqrt() / starts as f64;
    Ok(SimEstimate {
        value,
        std_error,
        half_width: 1.96 * std_error,
        n_samples,
        seed: config.seed,
    })
}
