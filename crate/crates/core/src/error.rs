use thiserror::Error;

/// Errors produced by the analytic and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {field}: {value} ({reason})")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("down-rate is undefined at state 0 (reflecting boundary)")]
    ReflectingBoundary,

    #[error("target state {target} must be greater than start state {start}")]
    InvalidTarget { start: u64, target: u64 },

    #[error("target state {target} is unreachable: up-rate at state {state} is not positive")]
    Unreachable { state: u64, target: u64 },

    #[error("no steady state: traffic intensity rho = {rho} is not below 1")]
    NoSteadyState { rho: f64 },

    #[error("stationary series diverges: tail ratio {ratio} is not below 1")]
    Divergent { ratio: f64 },

    #[error("truncation at state {truncation} leaves a tail mass bound of {tail_bound:e}")]
    TruncationTooShort { truncation: u64, tail_bound: f64 },

    #[error("tridiagonal system is singular at row {row}")]
    Singular { row: usize },

    #[error("replication {replication} did not reach the target within the {horizon} min horizon")]
    HittingCensored { replication: u64, horizon: f64 },

    #[error("no fleet size up to {m_max} meets the target (best value {best_value} at M = {best_servers})")]
    FleetNotFound {
        m_max: u32,
        best_servers: u32,
        best_value: f64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
