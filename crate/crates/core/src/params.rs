//! System parameters and the state-dependent transition-rate ladder.
//!
//! Everything is expressed in minutes. A [`SystemParams`] is valid for any
//! traffic intensity; operations that need a steady state check
//! [`SystemParams::require_stable`] themselves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_positive(field: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::InvalidParameter {
            field,
            value,
            reason: "must be finite",
        });
    }
    if value <= 0.0 {
        return Err(Error::InvalidParameter {
            field,
            value,
            reason: "must be positive",
        });
    }
    Ok(value)
}

/// Call and service intensities without a fleet size.
///
/// Inverse sizing queries search over the fleet size for a fixed workload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    t_call: f64,
    t_service: f64,
}

impl Workload {
    pub fn new(t_call: f64, t_service: f64) -> Result<Self> {
        let t_call = check_positive("t_call", t_call)?;
        let t_service = check_positive("t_service", t_service)?;
        let lambda = 1.0 / t_call;
        let mu = 1.0 / t_service;
        if !lambda.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidParameter {
                field: if lambda.is_finite() {
                    "t_service"
                } else {
                    "t_call"
                },
                value: if lambda.is_finite() {
                    t_service
                } else {
                    t_call
                },
                reason: "reciprocal rate is not finite",
            });
        }
        Ok(Self { t_call, t_service })
    }

    pub fn t_call(&self) -> f64 {
        self.t_call
    }

    pub fn t_service(&self) -> f64 {
        self.t_service
    }

    /// Offered load `a = λ/μ = T_S/T_C`.
    pub fn offered_load(&self) -> f64 {
        self.t_service / self.t_call
    }

    /// Smallest fleet with `ρ < 1`, i.e. `floor(a) + 1`.
    pub fn min_stable_servers(&self) -> u32 {
        let a = self.offered_load();
        let m = a.floor() + 1.0;
        if m >= u32::MAX as f64 {
            u32::MAX
        } else {
            m as u32
        }
    }

    pub fn with_servers(&self, servers: u32) -> Result<SystemParams> {
        SystemParams::new(self.t_call, self.t_service, servers)
    }
}

/// Validated model inputs: mean time between calls, mean service time and
/// fleet size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    t_call: f64,
    t_service: f64,
    servers: u32,
}

/// Dimensionless quantities derived from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// `γ = μ/λ = T_C/T_S`.
    pub gamma: f64,
    /// Traffic intensity `ρ = λ/(Mμ)`.
    pub rho: f64,
    /// Offered load `a = λ/μ = Mρ`.
    pub offered_load: f64,
}

impl SystemParams {
    pub fn new(t_call: f64, t_service: f64, servers: u32) -> Result<Self> {
        let workload = Workload::new(t_call, t_service)?;
        if servers == 0 {
            return Err(Error::InvalidParameter {
                field: "servers",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(Self {
            t_call: workload.t_call,
            t_service: workload.t_service,
            servers,
        })
    }

    /// Builds parameters from the arrival rate `λ` and per-server service rate `μ`.
    pub fn from_rates(lambda: f64, mu: f64, servers: u32) -> Result<Self> {
        let lambda = check_positive("lambda", lambda)?;
        let mu = check_positive("mu", mu)?;
        Self::new(1.0 / lambda, 1.0 / mu, servers)
    }

    pub fn t_call(&self) -> f64 {
        self.t_call
    }

    pub fn t_service(&self) -> f64 {
        self.t_service
    }

    pub fn servers(&self) -> u32 {
        self.servers
    }

    pub fn workload(&self) -> Workload {
        Workload {
            t_call: self.t_call,
            t_service: self.t_service,
        }
    }

    /// Call arrival rate `λ = 1/T_C`, per minute.
    pub fn arrival_rate(&self) -> f64 {
        1.0 / self.t_call
    }

    /// Per-ambulance service rate `μ = 1/T_S`, per minute.
    pub fn service_rate(&self) -> f64 {
        1.0 / self.t_service
    }

    pub fn gamma(&self) -> f64 {
        self.t_call / self.t_service
    }

    pub fn offered_load(&self) -> f64 {
        self.t_service / self.t_call
    }

    pub fn rho(&self) -> f64 {
        self.offered_load() / f64::from(self.servers)
    }

    pub fn derived(&self) -> DerivedParams {
        DerivedParams {
            gamma: self.gamma(),
            rho: self.rho(),
            offered_load: self.offered_load(),
        }
    }

    /// `true` iff `ρ < 1`, decided as `a < M` so the test is exact.
    pub fn is_stable(&self) -> bool {
        self.offered_load() < f64::from(self.servers)
    }

    pub fn require_stable(&self) -> Result<()> {
        if self.is_stable() {
            Ok(())
        } else {
            Err(Error::NoSteadyState { rho: self.rho() })
        }
    }

    pub fn ladder(&self) -> RateLadder {
        RateLadder {
            lambda: self.arrival_rate(),
            mu: self.service_rate(),
            servers: self.servers,
        }
    }
}

/// Validates inputs and returns the parameter record with its derived quantities.
pub fn build_params(
    t_call: f64,
    t_service: f64,
    servers: u32,
) -> Result<(SystemParams, DerivedParams)> {
    let params = SystemParams::new(t_call, t_service, servers)?;
    Ok((params, params.derived()))
}

/// Jump direction on the birth-death ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

/// Nearest-neighbour transition rates of a birth-death chain reflecting at 0.
///
/// `down(n)` is only consulted for `n >= 1`.
pub trait BirthDeath {
    fn up(&self, n: u64) -> f64;
    fn down(&self, n: u64) -> f64;
}

impl<T: BirthDeath + ?Sized> BirthDeath for &T {
    fn up(&self, n: u64) -> f64 {
        (**self).up(n)
    }

    fn down(&self, n: u64) -> f64 {
        (**self).down(n)
    }
}

/// The M-server ladder: `ω⁺ₙ = λ`, `ω⁻ₙ = μ·min(n, M)`.
///
/// Rates are evaluated on demand, so arbitrarily large states are exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateLadder {
    lambda: f64,
    mu: f64,
    servers: u32,
}

impl RateLadder {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn servers(&self) -> u32 {
        self.servers
    }

    pub fn rate_at(&self, state: u64, direction: Direction) -> Result<f64> {
        match direction {
            Direction::Up => Ok(self.lambda),
            Direction::Down if state == 0 => Err(Error::ReflectingBoundary),
            Direction::Down => Ok(self.mu * state.min(u64::from(self.servers)) as f64),
        }
    }
}

impl BirthDeath for RateLadder {
    fn up(&self, _n: u64) -> f64 {
        self.lambda
    }

    fn down(&self, n: u64) -> f64 {
        self.mu * n.min(u64::from(self.servers)) as f64
    }
}

/// A ladder defined by two closures, for chains other than the M-server model.
#[derive(Clone, Copy)]
pub struct FnLadder<U, D> {
    up: U,
    down: D,
}

impl<U, D> FnLadder<U, D>
where
    U: Fn(u64) -> f64,
    D: Fn(u64) -> f64,
{
    pub fn new(up: U, down: D) -> Self {
        Self { up, down }
    }
}

impl<U, D> BirthDeath for FnLadder<U, D>
where
    U: Fn(u64) -> f64,
    D: Fn(u64) -> f64,
{
    fn up(&self, n: u64) -> f64 {
        (self.up)(n)
    }

    fn down(&self, n: u64) -> f64 {
        (self.down)(n)
    }
}
