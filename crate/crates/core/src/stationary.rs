//! Stationary distribution of the occupation process.
//!
//! For `ρ < 1` the head `π_0..π_M` is Poisson-shaped and the tail is
//! geometric, `πₙ = π_M ρ^{n−M}` for `n ≥ M`. The head is built with the
//! ratio recurrence `π_{n+1}/πₙ = a/(n+1)`; the tail is kept symbolic.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::significant;
use crate::params::{BirthDeath, SystemParams};

/// Header of the distribution CSV.
pub const STATIONARY_CSV_HEADER: &str = "n,pi_n";

/// `ρ` at or above this value is accepted but flagged as ill-conditioned.
pub const CONDITIONING_THRESHOLD: f64 = 1.0 - 1e-9;

// Head terms are rescaled by this factor whenever they grow past it.
const RESCALE: f64 = 1e250;

/// Tail mass tolerated by [`required_truncation`].
pub const TRUNCATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryProfile {
    /// `π_0..=π_M`.
    pub head: Vec<f64>,
    /// Geometric ratio of the tail (equal to `ρ`).
    pub tail_ratio: f64,
    /// Normalization constant `S`. May overflow to `+∞` for very large fleets;
    /// `head` is still exact then.
    pub norm: f64,
    /// Probability that all servers are busy, `P(n ≥ M)`.
    pub p_occup: f64,
    /// Set when `ρ ≥ 1 − 1e-9`: queue moments scale like `(1−ρ)⁻¹`.
    pub ill_conditioned: bool,
}

impl StationaryProfile {
    pub fn servers(&self) -> u32 {
        (self.head.len() - 1) as u32
    }

    /// `πₙ` for any `n`, evaluating the geometric tail on demand.
    pub fn pi(&self, n: u64) -> f64 {
        let m = self.head.len() as u64 - 1;
        if n <= m {
            self.head[n as usize]
        } else {
            let extra = n - m;
            self.head[m as usize] * self.tail_ratio.powf(extra as f64)
        }
    }

    /// Closed-form mass of states above `M`: `π_M ρ/(1−ρ)`.
    pub fn tail_mass(&self) -> f64 {
        let pi_m = *self.head.last().expect("non-empty head");
        pi_m * self.tail_ratio / (1.0 - self.tail_ratio)
    }

    /// Last state of the CSV dump: `M + ceil(ln 1e-9 / ln ρ)`.
    pub fn dump_last_state(&self) -> u64 {
        let m = self.head.len() as u64 - 1;
        if self.tail_ratio <= 0.0 {
            return m;
        }
        let extra = (1e-9f64.ln() / self.tail_ratio.ln()).ceil();
        m + extra.max(0.0) as u64
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{STATIONARY_CSV_HEADER}")?;
        for n in 0..=self.dump_last_state() {
            writeln!(out, "{},{}", n, significant(self.pi(n), 6))?;
        }
        Ok(())
    }
}

/// Unnormalized head terms `aⁿ/n!` with a shared power-of-`RESCALE` scale.
struct HeadTerms {
    terms: Vec<f64>,
    /// True terms are `terms[n] * RESCALE^scale`.
    scale: i32,
}

fn head_terms(offered_load: f64, servers: u32) -> HeadTerms {
    let mut terms = Vec::with_capacity(servers as usize + 1);
    let mut scale = 0;
    let mut term = 1.0;
    terms.push(term);
    for n in 1..=servers {
        term *= offered_load / f64::from(n);
        if term > RESCALE {
            for t in terms.iter_mut() {
                *t /= RESCALE;
            }
            term /= RESCALE;
            scale += 1;
        }
        terms.push(term);
    }
    HeadTerms { terms, scale }
}

/// Closed-form stationary distribution; requires `ρ < 1`.
pub fn stationary_profile(params: &SystemParams) -> Result<StationaryProfile> {
    params.require_stable()?;
    let rho = params.rho();
    let HeadTerms { terms, scale } = head_terms(params.offered_load(), params.servers());
    let m = terms.len() - 1;
    let scaled_norm: f64 = terms[..m].iter().sum::<f64>() + terms[m] / (1.0 - rho);
    let head: Vec<f64> = terms.iter().map(|t| t / scaled_norm).collect();
    let p_occup = head[m] / (1.0 - rho);
    let norm = scaled_norm * RESCALE.powi(scale);
    Ok(StationaryProfile {
        head,
        tail_ratio: rho,
        norm,
        p_occup,
        ill_conditioned: rho >= CONDITIONING_THRESHOLD,
    })
}

/// Smallest truncation state for which the geometric tail beyond it carries
/// less than [`TRUNCATION_TOLERANCE`] of the mass.
pub fn required_truncation(params: &SystemParams) -> Result<u64> {
    let profile = stationary_profile(params)?;
    let m = u64::from(params.servers());
    let rho = params.rho();
    let mut n = m;
    // Mass beyond n is π_n ρ/(1−ρ).
    while profile.pi(n) * rho / (1.0 - rho) >= TRUNCATION_TOLERANCE {
        n += 1;
    }
    Ok(n)
}

/// Product-form distribution `πₙ ∝ Π_{j=1}^{n} ω⁺_{j−1}/ω⁻ⱼ` for an arbitrary
/// ladder, normalized over `0..=truncation`.
///
/// The neglected tail is bounded by extending the ratio at the truncation
/// point geometrically, which is exact for ladders whose ratio is constant
/// beyond that point (as for the M-server model once `truncation ≥ M`).
pub fn stationary_general<L: BirthDeath>(ladder: &L, truncation: u64) -> Result<Vec<f64>> {
    let mut weights = Vec::with_capacity(truncation as usize + 1);
    let mut w = 1.0;
    weights.push(w);
    for j in 1..=truncation {
        w *= ladder.up(j - 1) / ladder.down(j);
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    let ratio = ladder.up(truncation) / ladder.down(truncation + 1);
    if ratio >= 1.0 {
        return Err(Error::Divergent { ratio });
    }
    let last = weights[truncation as usize] / total;
    let tail_bound = last * ratio / (1.0 - ratio);
    if tail_bound >= TRUNCATION_TOLERANCE {
        return Err(Error::TruncationTooShort {
            truncation,
            tail_bound,
        });
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Erlang-B blocking probability by `B(n) = aB(n−1)/(n + aB(n−1))`.
pub fn erlang_b(offered_load: f64, servers: u32) -> f64 {
    let mut b = 1.0;
    for n in 1..=servers {
        let ab = offered_load * b;
        b = ab / (f64::from(n) + ab);
    }
    b
}

/// Probability that all `M` servers are busy (Erlang C); requires `ρ < 1`.
pub fn p_occupation(params: &SystemParams) -> Result<f64> {
    params.require_stable()?;
    let b = erlang_b(params.offered_load(), params.servers());
    let rho = params.rho();
    Ok(b / (1.0 - rho * (1.0 - b)))
}

/// `P(k calls waiting | all servers busy) = ρᵏ(1−ρ)`.
pub fn queue_conditional_pmf(params: &SystemParams, k: u64) -> Result<f64> {
    params.require_stable()?;
    let rho = params.rho();
    Ok(rho.powf(k as f64) * (1.0 - rho))
}

/// Mean and standard deviation of the queue given full occupation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueStats {
    pub mean_len: f64,
    pub std_len: f64,
}

pub fn queue_stats(params: &SystemParams) -> Result<QueueStats> {
    params.require_stable()?;
    let rho = params.rho();
    Ok(QueueStats {
        mean_len: rho / (1.0 - rho),
        std_len: rho.sqrt() / (1.0 - rho),
    })
}
