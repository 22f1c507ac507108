//! Mean first-passage times to fleet saturation.
//!
//! The walk starts at occupation `n ∈ [0, M]` and the target is the first
//! entry into state `M + 1`, the first instant a call has to wait. Three
//! routes compute the same numbers:
//!
//! * [`mfpt_critical_profile`]: the closed form in `γ = T_C/T_S`;
//! * [`mfpt_general`]: the nested sum/product formula for any ladder;
//! * [`mfpt_linear_solve`]: direct elimination of the tridiagonal
//!   hitting-time equations.
//!
//! Nested sums never form `i!` or `γ^{-k}`; each inner sum extends the
//! running product `Π_{j=k+1}^{i} ω⁻ⱼ/ω⁺ⱼ` one factor at a time.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::significant;
use crate::params::{BirthDeath, SystemParams, Workload};

/// Header of the sweep CSV.
pub const SWEEP_CSV_HEADER: &str = "t_call_min,servers,mean_time_to_critical_min";

/// Mean times to saturation from every start state `0..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfptProfile {
    /// `times[n]` is `T(n)` in minutes.
    pub times: Vec<f64>,
    /// `⟨T⟩`, the average of `times` over all start states.
    pub mean_time: f64,
}

/// Mean hitting time from the origin, `T(0 → target)`, for any ladder.
///
/// Returns `Σ_{k<target} 1/ω⁺ₖ · (1 + Σ_{i=k+1}^{target-1} Π_{j=k+1}^{i} ω⁻ⱼ/ω⁺ⱼ)`.
fn hitting_from_origin<L: BirthDeath>(ladder: &L, target: u64) -> f64 {
    let mut total = 0.0;
    for k in 0..target {
        let mut inner = 1.0;
        let mut product = 1.0;
        for i in k + 1..target {
            product *= ladder.down(i) / ladder.up(i);
            inner += product;
        }
        total += inner / ladder.up(k);
    }
    total
}

/// Mean first-passage time from `start` to `target` on a ladder reflecting at 0.
pub fn mfpt_general<L: BirthDeath>(ladder: &L, start: u64, target: u64) -> Result<f64> {
    if target <= start {
        return Err(Error::InvalidTarget { start, target });
    }
    // Any zero up-rate below the target traps the walk, including below `start`.
    if let Some(state) = (0..target).find(|&n| !(ladder.up(n) > 0.0)) {
        return Err(Error::Unreachable { state, target });
    }
    let from_origin = hitting_from_origin(ladder, target);
    if start == 0 {
        return Ok(from_origin);
    }
    Ok(from_origin - hitting_from_origin(ladder, start))
}

/// `T(n)` for `n = 0..=M` and their average, via the closed form in `γ`.
///
/// Works for any traffic intensity; no steady state is needed.
pub fn mfpt_critical_profile(params: &SystemParams) -> MfptProfile {
    let m = params.servers() as usize;
    let gamma = params.gamma();
    let t_call = params.t_call();

    // increments[i] = Σ_{k<i} Π_{j=k+1}^{i} jγ, accumulated with k outer and
    // i inner so each product is extended incrementally.
    let mut increments = vec![0.0; m + 1];
    for k in 0..m {
        let mut product = 1.0;
        for (i, slot) in increments.iter_mut().enumerate().skip(k + 1) {
            product *= i as f64 * gamma;
            *slot += product;
        }
    }

    // partial[n] = T(0 → n) / T_C = n + Σ_{i<n} increments[i].
    let mut partial = Vec::with_capacity(m + 2);
    let mut nested = 0.0;
    partial.push(0.0);
    for (n, inc) in (1..=m + 1).zip(increments.iter()) {
        nested += inc;
        partial.push(n as f64 + nested);
    }

    let t0 = t_call * partial[m + 1];
    let mut times = Vec::with_capacity(m + 1);
    times.push(t0);
    times.push(t0 - t_call);
    for p in &partial[2..=m] {
        times.push(t0 - t_call * p);
    }
    let mean_time = times.iter().sum::<f64>() / times.len() as f64;
    MfptProfile { times, mean_time }
}

/// Hitting times of `target` from every start in `0..target`, by solving
/// `(ω⁺ₙ+ω⁻ₙ)T(n) − ω⁺ₙT(n+1) − ω⁻ₙT(n−1) = 1` with `T(target) = 0`.
///
/// Independent of the summation formulas; the test suite uses it as an oracle.
/// Elimination runs down from the absorbing end and carries `1 − βₙ`
/// directly, so every pivot is a sum of non-negative terms.
pub fn mfpt_linear_solve<L: BirthDeath>(ladder: &L, target: u64) -> Result<Vec<f64>> {
    if target == 0 {
        return Err(Error::InvalidTarget { start: 0, target });
    }
    let size = target as usize;
    // T(n) = alpha[n] + beta[n]·T(n−1); g_next holds 1 − beta[n+1].
    let mut alpha = vec![0.0; size];
    let mut beta = vec![0.0; size];
    let mut g_next = 1.0;
    let mut alpha_next = 0.0;
    for n in (0..size).rev() {
        let up = ladder.up(n as u64);
        let down = if n == 0 { 0.0 } else { ladder.down(n as u64) };
        let pivot = up * g_next + down;
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::Singular { row: n });
        }
        alpha[n] = (1.0 + up * alpha_next) / pivot;
        beta[n] = down / pivot;
        g_next = up * g_next / pivot;
        alpha_next = alpha[n];
    }
    let mut times = alpha;
    for n in 1..size {
        times[n] += beta[n] * times[n - 1];
    }
    Ok(times)
}

/// One grid point of an MFPT sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t_call: f64,
    pub servers: u32,
    pub mean_time: f64,
}

/// `⟨T⟩` over a `servers × t_call` grid, servers outer.
pub fn mfpt_sweep(t_service: f64, servers: &[u32], t_call_grid: &[f64]) -> Result<Vec<SweepRow>> {
    if servers.is_empty() {
        return Err(Error::InvalidParameter {
            field: "servers",
            value: 0.0,
            reason: "list must not be empty",
        });
    }
    if t_call_grid.is_empty() {
        return Err(Error::InvalidParameter {
            field: "t_call_grid",
            value: 0.0,
            reason: "list must not be empty",
        });
    }
    let mut rows = Vec::with_capacity(servers.len() * t_call_grid.len());
    for &m in servers {
        for &t_call in t_call_grid {
            let params = Workload::new(t_call, t_service)?.with_servers(m)?;
            rows.push(SweepRow {
                t_call,
                servers: m,
                mean_time: mfpt_critical_profile(&params).mean_time,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{}",
            significant(row.t_call, 6),
            row.servers,
            significant(row.mean_time, 6)
        )?;
    }
    Ok(())
}
