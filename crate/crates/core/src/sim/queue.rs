//! Stationary runs: the explicit FCFS system and the bare jump process.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::batch::Batches;
use super::{AssignmentPolicy, SimConfig, SimEstimate, Stream};
use crate::error::Result;
use crate::params::{BirthDeath, SystemParams};

/// Occupation states above `M` tracked individually.
const TAIL_BINS: usize = 10;
/// `π̂ₙ` is reported for `n ≤ M + PI_EXTRA`.
const PI_EXTRA: usize = 5;

// Offset keeping FCFS streams apart from the jump-process streams.
const JUMP_STREAM_BASE: u64 = 1 << 62;

/// Per-batch sums for one replication.
#[derive(Debug, Clone)]
struct Tally {
    total_time: f64,
    /// Time spent in state n, for n ≤ M + TAIL_BINS.
    state_time: Vec<f64>,
    occupied_time: f64,
    /// ∫ (n − M)⁺ dt
    queue_area: f64,
    busy_time: Vec<f64>,
    completions: u64,
    waits: u64,
    wait_sum: f64,
    waits_within: u64,
}

impl Tally {
    fn new(servers: usize) -> Self {
        Self {
            total_time: 0.0,
            state_time: vec![0.0; servers + TAIL_BINS + 1],
            occupied_time: 0.0,
            queue_area: 0.0,
            busy_time: vec![0.0; servers],
            completions: 0,
            waits: 0,
            wait_sum: 0.0,
            waits_within: 0,
        }
    }

    fn occupy(&mut self, servers: usize, n: usize, dt: f64) {
        self.total_time += dt;
        if let Some(slot) = self.state_time.get_mut(n) {
            *slot += dt;
        }
        if n >= servers {
            self.occupied_time += dt;
            self.queue_area += (n - servers) as f64 * dt;
        }
    }
}

struct Replication {
    tallies: Vec<Tally>,
    waits: Vec<f64>,
}

/// Empirical counterparts of the steady-state indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryEstimates {
    pub servers: u32,
    /// `π̂ₙ` for `n = 0..=M+5`.
    pub pi: Vec<SimEstimate>,
    pub p_occup: SimEstimate,
    /// `P̂(k waiting | all busy)` for `k = 0..=10`.
    pub queue_conditional_pmf: Vec<SimEstimate>,
    pub mean_queue_len_conditional: SimEstimate,
    /// Busy fraction averaged over ambulances.
    pub p_busy_per_server: SimEstimate,
    /// Busy fraction of each ambulance.
    pub server_busy: Vec<SimEstimate>,
    /// Completed services per minute.
    pub throughput: SimEstimate,
    /// Mean wait of calls that found every ambulance busy, minutes.
    pub wait_mean_conditional: SimEstimate,
    /// Fraction of those calls dispatched within `t_los`.
    pub wait_cdf_at_t_los: SimEstimate,
    pub t_los: f64,
    /// Least-squares slope of the batch-mean queue length, calls per minute.
    pub queue_growth_per_min: SimEstimate,
    /// `true` when the run was made with `ρ ≥ 1`.
    pub unstable: bool,
    /// Individual conditional waits in arrival order, when requested.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub waits: Vec<f64>,
}

impl StationaryEstimates {
    /// Every scalar estimate under a stable flat name.
    pub fn named(&self) -> Vec<(String, SimEstimate)> {
        let mut out = Vec::new();
        for (n, e) in self.pi.iter().enumerate() {
            out.push((format!("pi_{n}"), *e));
        }
        out.push(("p_occup".into(), self.p_occup));
        for (k, e) in self.queue_conditional_pmf.iter().enumerate() {
            out.push((format!("queue_conditional_pmf_{k}"), *e));
        }
        out.push((
            "mean_queue_len_conditional".into(),
            self.mean_queue_len_conditional,
        ));
        out.push(("p_busy_per_server".into(), self.p_busy_per_server));
        for (s, e) in self.server_busy.iter().enumerate() {
            out.push((format!("server_busy_{s}"), *e));
        }
        out.push(("throughput".into(), self.throughput));
        out.push(("wait_mean_conditional".into(), self.wait_mean_conditional));
        out.push(("wait_cdf_at_t_los".into(), self.wait_cdf_at_t_los));
        out.push(("queue_growth_per_min".into(), self.queue_growth_per_min));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Departure {
    time: f64,
    server: usize,
}

impl Eq for Departure {}

impl Ord for Departure {
    // Reversed so the max-heap pops the earliest departure.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.server.cmp(&self.server))
    }
}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Fcfs<'a> {
    config: &'a SimConfig,
    batches: Batches,
    servers: usize,
    lambda: f64,
    mu: f64,
    t_los: f64,
    rng: Stream,
    idle: Vec<usize>,
    busy_since: Vec<f64>,
    departures: BinaryHeap<Departure>,
    queue: VecDeque<f64>,
    tallies: Vec<Tally>,
    waits: Vec<f64>,
}

impl<'a> Fcfs<'a> {
    fn new(params: &SystemParams, config: &'a SimConfig, t_los: f64, replication: u64) -> Self {
        let servers = params.servers() as usize;
        let batches = Batches::new(config.warmup, config.horizon, config.batches);
        Self {
            config,
            batches,
            servers,
            lambda: params.arrival_rate(),
            mu: params.service_rate(),
            t_los,
            rng: Stream::new(config.seed, replication),
            idle: (0..servers).collect(),
            busy_since: vec![0.0; servers],
            departures: BinaryHeap::new(),
            queue: VecDeque::new(),
            tallies: vec![Tally::new(servers); batches.count()],
            waits: Vec::new(),
        }
    }

    fn occupation(&self) -> usize {
        self.servers - self.idle.len() + self.queue.len()
    }

    fn pick_idle(&mut self) -> usize {
        let slot = match self.config.policy {
            AssignmentPolicy::Random => self.rng.index(self.idle.len()),
            AssignmentPolicy::LowestIndex => {
                let (slot, _) = self
                    .idle
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, s)| **s)
                    .expect("an idle server");
                slot
            }
        };
        self.idle.swap_remove(slot)
    }

    fn start_service(&mut self, server: usize, now: f64) {
        let time = now + self.rng.exp(self.mu);
        self.departures.push(Departure { time, server });
    }

    fn credit_busy(&mut self, server: usize, from: f64, to: f64) {
        let tallies = &mut self.tallies;
        self.batches
            .split(from, to, |b, dt| tallies[b].busy_time[server] += dt);
    }

    fn record_wait(&mut self, arrived: f64, now: f64) {
        if let Some(b) = self.batches.of(arrived) {
            let wait = now - arrived;
            let tally = &mut self.tallies[b];
            tally.waits += 1;
            tally.wait_sum += wait;
            if wait <= self.t_los {
                tally.waits_within += 1;
            }
            if self.config.keep_waits {
                self.waits.push(wait);
            }
        }
    }

    fn run(mut self) -> Replication {
        let horizon = self.config.horizon;
        for _ in 0..self.config.start_state {
            if self.idle.is_empty() {
                self.queue.push_back(0.0);
            } else {
                let s = self.pick_idle();
                self.busy_since[s] = 0.0;
                self.start_service(s, 0.0);
            }
        }
        let mut now = 0.0;
        let mut next_arrival = self.rng.exp(self.lambda);
        loop {
            let next_departure = self.departures.peek().map_or(f64::INFINITY, |d| d.time);
            let next = next_arrival.min(next_departure);
            let until = next.min(horizon);
            let n = self.occupation();
            let servers = self.servers;
            let tallies = &mut self.tallies;
            self.batches
                .split(now, until, |b, dt| tallies[b].occupy(servers, n, dt));
            if next >= horizon {
                break;
            }
            now = next;
            if next_arrival <= next_departure {
                if self.idle.is_empty() {
                    self.queue.push_back(now);
                } else {
                    let s = self.pick_idle();
                    self.busy_since[s] = now;
                    self.start_service(s, now);
                }
                next_arrival = now + self.rng.exp(self.lambda);
            } else {
                let Departure { server, .. } = self.departures.pop().expect("pending departure");
                if let Some(b) = self.batches.of(now) {
                    self.tallies[b].completions += 1;
                }
                match self.queue.pop_front() {
                    Some(arrived) => {
                        self.record_wait(arrived, now);
                        self.start_service(server, now);
                    }
                    None => {
                        let since = self.busy_since[server];
                        self.credit_busy(server, since, now);
                        self.idle.push(server);
                    }
                }
            }
        }
        let busy: Vec<usize> = self.departures.iter().map(|d| d.server).collect();
        for server in busy {
            let since = self.busy_since[server];
            self.credit_busy(server, since, horizon);
        }
        Replication {
            tallies: self.tallies,
            waits: self.waits,
        }
    }
}

/// Birth-death jump process with the ladder rates; only occupation is tracked.
fn jump_replication(params: &SystemParams, config: &SimConfig, replication: u64) -> Replication {
    let ladder = params.ladder();
    let servers = params.servers() as usize;
    let batches = Batches::new(config.warmup, config.horizon, config.batches);
    let mut tallies = vec![Tally::new(servers); batches.count()];
    let mut rng = Stream::new(config.seed, JUMP_STREAM_BASE | replication);
    let mut state = config.start_state;
    let mut now = 0.0;
    while now < config.horizon {
        let up = ladder.up(state);
        let down = if state == 0 { 0.0 } else { ladder.down(state) };
        let total = up + down;
        let next = now + rng.exp(total);
        let n = state as usize;
        batches.split(now, next, |b, dt| tallies[b].occupy(servers, n, dt));
        now = next;
        if rng.uniform() * total < up {
            state += 1;
        } else {
            state -= 1;
        }
    }
    Replication {
        tallies,
        waits: Vec::new(),
    }
}

/// Pools one value per (replication, batch), skipping batches where the
/// ratio is undefined.
fn pooled(reps: &[Replication], seed: u64, value: impl Fn(&Tally) -> Option<f64>) -> SimEstimate {
    let samples: Vec<f64> = reps
        .iter()
        .flat_map(|r| r.tallies.iter())
        .filter_map(value)
        .collect();
    SimEstimate::from_samples(&samples, seed)
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn growth_slope(tallies: &[Tally]) -> f64 {
    let n = tallies.len() as f64;
    let xs: Vec<f64> = (0..tallies.len()).map(|i| i as f64).collect();
    let ys: Vec<f64> = tallies
        .iter()
        .map(|t| ratio(t.queue_area, t.total_time).unwrap_or(0.0))
        .collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let batch_len = tallies.iter().map(|t| t.total_time).sum::<f64>() / n;
    sxy / sxx / batch_len
}

fn summarize(
    params: &SystemParams,
    config: &SimConfig,
    t_los: f64,
    reps: Vec<Replication>,
) -> StationaryEstimates {
    let m = params.servers() as usize;
    let seed = config.seed;
    let pi = (0..=m + PI_EXTRA)
        .map(|n| pooled(&reps, seed, |t| ratio(t.state_time[n], t.total_time)))
        .collect();
    let queue_conditional_pmf = (0..=TAIL_BINS)
        .map(|k| pooled(&reps, seed, |t| ratio(t.state_time[m + k], t.occupied_time)))
        .collect();
    let server_busy = (0..m)
        .map(|s| pooled(&reps, seed, |t| ratio(t.busy_time[s], t.total_time)))
        .collect();
    let slopes: Vec<f64> = reps.iter().map(|r| growth_slope(&r.tallies)).collect();
    StationaryEstimates {
        servers: params.servers(),
        pi,
        p_occup: pooled(&reps, seed, |t| ratio(t.occupied_time, t.total_time)),
        queue_conditional_pmf,
        mean_queue_len_conditional: pooled(&reps, seed, |t| ratio(t.queue_area, t.occupied_time)),
        p_busy_per_server: pooled(&reps, seed, |t| {
            ratio(t.busy_time.iter().sum::<f64>() / m as f64, t.total_time)
        }),
        server_busy,
        throughput: pooled(&reps, seed, |t| ratio(t.completions as f64, t.total_time)),
        wait_mean_conditional: pooled(&reps, seed, |t| ratio(t.wait_sum, t.waits as f64)),
        wait_cdf_at_t_los: pooled(&reps, seed, |t| {
            ratio(t.waits_within as f64, t.waits as f64)
        }),
        t_los,
        queue_growth_per_min: SimEstimate::from_samples(&slopes, seed),
        unstable: !params.is_stable(),
        waits: reps.into_iter().flat_map(|r| r.waits).collect(),
    }
}

/// Event-driven FCFS simulation with `M` ambulances: Poisson(λ) calls,
/// Exp(μ) services, idle ambulances chosen by `config.policy`.
///
/// Runs with `ρ ≥ 1` are allowed; the queue then grows without bound and
/// `queue_growth_per_min` measures the trend.
pub fn simulate_stationary(
    params: &SystemParams,
    config: &SimConfig,
    t_los: f64,
) -> Result<StationaryEstimates> {
    config.validate()?;
    let reps = config.run(u64::from(config.replications), |rep| {
        Fcfs::new(params, config, t_los, rep).run()
    });
    Ok(summarize(params, config, t_los, reps))
}

/// `π̂ₙ` for `n ≤ M + 5` from the birth-death jump process alone.
pub fn simulate_occupancy(params: &SystemParams, config: &SimConfig) -> Result<Vec<SimEstimate>> {
    config.validate()?;
    let reps = config.run(u64::from(config.replications), |rep| {
        jump_replication(params, config, rep)
    });
    let m = params.servers() as usize;
    Ok((0..=m + PI_EXTRA)
        .map(|n| pooled(&reps, config.seed, |t| ratio(t.state_time[n], t.total_time)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(seed: u64, horizon: f64) -> SimConfig {
        SimConfig {
            seed,
            replications: 2,
            warmup: 1000.0,
            horizon,
            start_state: 0,
            batches: 20,
            policy: AssignmentPolicy::Random,
            keep_waits: false,
            threads: None,
        }
    }

    #[test]
    fn departure_heap_pops_earliest() {
        let mut heap = BinaryHeap::new();
        for (time, server) in [(3.0, 0), (1.0, 1), (2.0, 2)] {
            heap.push(Departure { time, server });
        }
        assert_eq!(heap.pop().unwrap().server, 1);
        assert_eq!(heap.pop().unwrap().server, 2);
    }

    #[test]
    fn single_server_sanity() {
        let p = SystemParams::new(2.0, 1.0, 1).unwrap();
        let est = simulate_stationary(&p, &config(3, 2e5), 1.0).unwrap();
        assert!(est.p_occup.covers(0.5, 4.0), "{:?}", est.p_occup);
        assert!(est.pi[0].covers(0.5, 4.0));
        assert!(est.p_busy_per_server.covers(0.5, 4.0));
        assert!(est.throughput.covers(0.5, 4.0));
        // Conditional wait is Exp(1 − ρ) = Exp(0.5).
        assert!(
            est.wait_mean_conditional.covers(2.0, 4.0),
            "{:?}",
            est.wait_mean_conditional
        );
        assert!(est.wait_cdf_at_t_los.covers(1.0 - (-0.5f64).exp(), 4.0));
        assert!(!est.unstable);
    }

    #[test]
    fn fractions_are_consistent() {
        let p = SystemParams::new(15.0, 50.0, 6).unwrap();
        let est = simulate_stationary(&p, &config(1, 1e5), 30.0).unwrap();
        let head: f64 = est.pi[..6].iter().map(|e| e.value).sum();
        assert!((head + est.p_occup.value - 1.0).abs() < 1e-9);
        let cond: f64 = est.queue_conditional_pmf.iter().map(|e| e.value).sum();
        assert!(cond <= 1.0 + 1e-12);
        assert_eq!(est.server_busy.len(), 6);
        assert_eq!(est.pi.len(), 12);
        assert_eq!(est.queue_conditional_pmf.len(), 11);
        assert!(est.named().iter().any(|(k, _)| k == "pi_11"));
    }

    #[test]
    fn lowest_index_policy_skews_servers() {
        let p = SystemParams::new(15.0, 50.0, 6).unwrap();
        let mut c = config(4, 2e5);
        c.policy = AssignmentPolicy::LowestIndex;
        let est = simulate_stationary(&p, &c, 30.0).unwrap();
        assert!(est.server_busy[0].value > est.server_busy[5].value + 0.2);
        assert!(est.p_busy_per_server.covers(5.0 / 9.0, 4.0));
    }

    #[test]
    fn unstable_queue_grows() {
        let p = SystemParams::new(10.0, 50.0, 3).unwrap();
        let est = simulate_stationary(&p, &config(2, 1e5), 30.0).unwrap();
        assert!(est.unstable);
        // Net inflow λ − Mμ = 0.1 − 0.06 per minute.
        assert!(
            est.queue_growth_per_min.value > 0.02,
            "{:?}",
            est.queue_growth_per_min
        );
    }

    #[test]
    fn keeps_waits_on_request() {
        let p = SystemParams::new(15.0, 50.0, 6).unwrap();
        let mut c = config(8, 5e4);
        c.keep_waits = true;
        let est = simulate_stationary(&p, &c, 30.0).unwrap();
        let recorded: u64 = est.wait_mean_conditional.n_samples;
        assert!(!est.waits.is_empty() && recorded > 0);
        assert!(est.waits.iter().all(|w| *w >= 0.0));
    }

    #[test]
    fn start_state_is_honoured() {
        let p = SystemParams::new(15.0, 50.0, 2).unwrap();
        let mut c = config(8, 2e4);
        c.start_state = 40;
        c.warmup = 0.0;
        let est = simulate_occupancy(&p, &c).unwrap();
        assert!(est.iter().all(|e| e.value.is_finite()));
        let fcfs = simulate_stationary(&p, &c, 30.0).unwrap();
        assert!(fcfs.mean_queue_len_conditional.value > 0.0);
    }
}
