//! Analytics for an ambulance fleet modelled as an M-server Markovian queue.
//!
//! Calls arrive with mean spacing `T_C`, each of `M` ambulances serves a call
//! in mean time `T_S`, and the number of unserved calls performs a
//! birth-death walk with rates `ω⁺ₙ = λ` and `ω⁻ₙ = μ·min(n, M)`.
//!
//! * [`mfpt`]: mean time until every ambulance is committed and a call has
//!   to wait, from any starting occupation. Valid for any load.
//! * [`stationary`]: the steady-state distribution and queue law (`ρ < 1`).
//! * [`service`]: waiting time, level of service, busy fraction, throughput
//!   and cost.
//! * [`sizing`]: smallest fleet meeting a stability, LOS, occupation or
//!   first-passage target.
//! * [`sim`]: a seeded Monte-Carlo oracle for all of the above.
//!
//! All times are minutes.
//!
//! ```
//! use emsq::{mfpt::mfpt_critical_profile, service::full_report, SystemParams};
//!
//! let params = SystemParams::new(15.0, 50.0, 6)?;
//! let report = full_report(&params, 30.0, 0.0)?;
//! assert!((report.p_occup - 0.1482).abs() < 1e-4);
//! assert!(mfpt_critical_profile(&params).mean_time > 0.0);
//! # Ok::<(), emsq::Error>(())
//! ```

// `!(x > 0.0)` is how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fmt;
pub mod mfpt;
pub mod params;
pub mod service;
pub mod sim;
pub mod sizing;
pub mod stationary;

pub use error::{Error, Result};
pub use params::{
    build_params, BirthDeath, DerivedParams, Direction, FnLadder, RateLadder, SystemParams,
    Workload,
};

// Compiles every Rust snippet of the guide in book/ as a doctest.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/first-passage.md")]
    mod first_passage {}
    #[doc = include_str!("../../../book/src/steady-state.md")]
    mod steady_state {}
    #[doc = include_str!("../../../book/src/service.md")]
    mod service {}
    #[doc = include_str!("../../../book/src/sizing.md")]
    mod sizing {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
