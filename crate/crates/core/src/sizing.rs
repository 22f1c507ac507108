//! Inverse queries: the smallest fleet meeting a target.
//!
//! Every criterion is answered by an ascending linear scan over the fleet
//! size. Monotonicity of LOS and occupation in `M` holds on every grid we
//! have tried but is not assumed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mfpt::mfpt_critical_profile;
use crate::params::{SystemParams, Workload};
use crate::service::level_of_service;
use crate::stationary::p_occupation;

pub const DEFAULT_M_MAX: u32 = 1000;

/// What the fleet has to achieve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizingCriterion {
    /// `ρ < 1`.
    Stability,
    /// `LOS(t_los) ≥ target`.
    LosTarget { target: f64, t_los: f64 },
    /// `P(occup) ≤ target`.
    OccupCeiling { target: f64 },
    /// `⟨T⟩ ≥ target` minutes; no steady state required.
    MfptHorizon { target: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizingQuery {
    #[serde(flatten)]
    pub criterion: SizingCriterion,
    pub m_max: u32,
}

impl SizingQuery {
    pub fn new(criterion: SizingCriterion) -> Self {
        Self {
            criterion,
            m_max: DEFAULT_M_MAX,
        }
    }

    pub fn with_m_max(mut self, m_max: u32) -> Self {
        self.m_max = m_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, value, reason| {
            Err(Error::InvalidParameter {
                field,
                value,
                reason,
            })
        };
        if self.m_max == 0 {
            return bad("m_max", 0.0, "must be at least 1");
        }
        match self.criterion {
            SizingCriterion::Stability => Ok(()),
            SizingCriterion::LosTarget { target, t_los } => {
                if !(target > 0.0 && target <= 1.0) {
                    return bad("target", target, "probability must lie in (0, 1]");
                }
                if !(t_los >= 0.0 && t_los.is_finite()) {
                    return bad("t_los", t_los, "must be non-negative");
                }
                Ok(())
            }
            SizingCriterion::OccupCeiling { target } => {
                if !(target > 0.0 && target <= 1.0) {
                    return bad("target", target, "probability must lie in (0, 1]");
                }
                Ok(())
            }
            SizingCriterion::MfptHorizon { target } => {
                if !(target > 0.0 && target.is_finite()) {
                    return bad("target", target, "horizon must be positive");
                }
                Ok(())
            }
        }
    }
}

/// Answer of a sizing query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetSize {
    /// Smallest qualifying fleet.
    #[serde(rename = "m")]
    pub servers: u32,
    /// Criterion value at the answer (ρ, LOS, P(occup) or ⟨T⟩).
    pub predicate_value: f64,
    /// First and last fleet sizes evaluated.
    pub scanned_range: [u32; 2],
}

impl SizingCriterion {
    fn evaluate(&self, params: &SystemParams) -> Result<f64> {
        match *self {
            SizingCriterion::Stability => Ok(params.rho()),
            SizingCriterion::LosTarget { t_los, .. } => level_of_service(params, t_los),
            SizingCriterion::OccupCeiling { .. } => p_occupation(params),
            SizingCriterion::MfptHorizon { .. } => Ok(mfpt_critical_profile(params).mean_time),
        }
    }

    fn accepts(&self, value: f64) -> bool {
        match *self {
            SizingCriterion::Stability => value < 1.0,
            SizingCriterion::LosTarget { target, .. } => value >= target,
            SizingCriterion::OccupCeiling { target } => value <= target,
            SizingCriterion::MfptHorizon { target } => value >= target,
        }
    }

    // Larger is better for LOS and ⟨T⟩, smaller for ρ and P(occup).
    fn better(&self, a: f64, b: f64) -> bool {
        match self {
            SizingCriterion::Stability | SizingCriterion::OccupCeiling { .. } => a < b,
            _ => a > b,
        }
    }

    fn scan_start(&self, workload: &Workload) -> u32 {
        match self {
            SizingCriterion::MfptHorizon { .. } => 1,
            _ => workload.min_stable_servers(),
        }
    }
}

/// Smallest `M ≤ m_max` satisfying the query.
pub fn min_fleet(workload: &Workload, query: &SizingQuery) -> Result<FleetSize> {
    query.validate()?;
    let criterion = query.criterion;
    let start = criterion.scan_start(workload);
    let mut best: Option<(u32, f64)> = None;
    if start <= query.m_max {
        for m in start..=query.m_max {
            let params = workload.with_servers(m)?;
            let value = criterion.evaluate(&params)?;
            if criterion.accepts(value) {
                return Ok(FleetSize {
                    servers: m,
                    predicate_value: value,
                    scanned_range: [start, m],
                });
            }
            if best.is_none_or(|(_, b)| criterion.better(value, b)) {
                best = Some((m, value));
            }
        }
    }
    let (best_servers, best_value) = match best {
        Some(b) => b,
        // Nothing in range is even stable; report ρ at the cap.
        None => (query.m_max, workload.with_servers(query.m_max)?.rho()),
    };
    Err(Error::FleetNotFound {
        m_max: query.m_max,
        best_servers,
        best_value,
    })
}
