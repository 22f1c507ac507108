//! Patient- and operator-facing performance measures.
//!
//! Waiting-time quantities are conditional on a call arriving while every
//! ambulance is busy. The unconditional mean wait is reported separately as
//! `p_occup · mean_wait`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::stationary::{p_occupation, queue_stats};

fn check_time(field: &'static str, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidParameter {
            field,
            value: t,
            reason: "must be non-negative",
        });
    }
    Ok(t)
}

/// Density of the wait behind `k_ahead` queued calls: Gamma(`k_ahead+1`, `Mμ`).
pub fn gamma_wait_density(t: f64, k_ahead: u64, params: &SystemParams) -> Result<f64> {
    let t = check_time("t", t)?;
    let alpha = f64::from(params.servers()) * params.service_rate();
    if k_ahead == 0 {
        return Ok(alpha * (-alpha * t).exp());
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let x = alpha * t;
    let ln_fact: f64 = (2..=k_ahead).map(|j| (j as f64).ln()).sum();
    Ok(alpha * (-x + k_ahead as f64 * x.ln() - ln_fact).exp())
}

/// Parameter `(1−ρ)Mμ` of the exponential waiting-time law.
pub fn wait_rate(params: &SystemParams) -> Result<f64> {
    params.require_stable()?;
    Ok((1.0 - params.rho()) * f64::from(params.servers()) * params.service_rate())
}

/// Conditional waiting-time density `(1−ρ)Mμ e^{−(1−ρ)Mμ t}`.
pub fn wait_density(t: f64, params: &SystemParams) -> Result<f64> {
    let rate = wait_rate(params)?;
    let t = check_time("t", t)?;
    Ok(rate * (-rate * t).exp())
}

/// Conditional mean wait `1/((1−ρ)Mμ)`, in minutes.
pub fn mean_wait(params: &SystemParams) -> Result<f64> {
    Ok(1.0 / wait_rate(params)?)
}

/// Fraction of calls dispatched within `t_los` minutes:
/// `1 − P(occup)·e^{−(1−ρ)Mμ·t_los}`.
pub fn level_of_service(params: &SystemParams, t_los: f64) -> Result<f64> {
    let rate = wait_rate(params)?;
    let t_los = check_time("t_los", t_los)?;
    let p_occup = p_occupation(params)?;
    Ok(los_from(p_occup, rate, t_los))
}

fn los_from(p_occup: f64, rate: f64, t_los: f64) -> f64 {
    1.0 - p_occup * (-rate * t_los).exp()
}

/// Fraction of time a given ambulance is busy, evaluated term by term as
///
/// `(1/S)(Σ_{n=1}^{M−1} M^{n−1}ρⁿ/(n−1)! + M^M ρ^M/(M!(1−ρ)))`.
///
/// The expression simplifies to `ρ`; the test suite checks that identity.
pub fn p_server_busy(params: &SystemParams) -> Result<f64> {
    params.require_stable()?;
    let m = params.servers();
    let a = params.offered_load();
    let rho = params.rho();
    // t = aⁿ/n!, rescaled jointly when large.
    let mut t = 1.0;
    let mut norm = 0.0;
    let mut busy = 0.0;
    for n in 0..m {
        norm += t;
        // Σ_{n=1}^{M−1} M^{n−1}ρⁿ/(n−1)! = ρ Σ_{j=0}^{M−2} a^j/j!
        if n + 1 < m {
            busy += rho * t;
        }
        t *= a / f64::from(n + 1);
        if t > 1e250 {
            t /= 1e250;
            norm /= 1e250;
            busy /= 1e250;
        }
    }
    let tail = t / (1.0 - rho);
    Ok((busy + tail) / (norm + tail))
}

/// Mean number of completed attentions per minute, `μ M P(busy)`.
pub fn throughput(params: &SystemParams) -> Result<f64> {
    Ok(params.service_rate() * f64::from(params.servers()) * p_server_busy(params)?)
}

/// Cost per ambulance per minute, `C μ P(busy)`.
pub fn cost_rate(params: &SystemParams, cost_per_attention: f64) -> Result<f64> {
    if cost_per_attention.is_nan() || cost_per_attention < 0.0 {
        return Err(Error::InvalidParameter {
            field: "cost_per_attention",
            value: cost_per_attention,
            reason: "must be non-negative",
        });
    }
    Ok(cost_per_attention * params.service_rate() * p_server_busy(params)?)
}

/// All steady-state indicators for one fleet size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceReport {
    pub servers: u32,
    pub rho: f64,
    /// `(1−ρ)Mμ`, per minute.
    pub wait_rate: f64,
    /// Conditional mean wait, minutes.
    pub mean_wait: f64,
    /// `p_occup · mean_wait`, minutes.
    pub mean_wait_unconditional: f64,
    pub mean_queue_len: f64,
    pub std_queue_len: f64,
    pub los: f64,
    pub t_los: f64,
    pub p_busy: f64,
    pub p_occup: f64,
    /// Attentions per minute.
    pub throughput: f64,
    /// Currency per minute per ambulance.
    pub cost_rate: f64,
    pub cost_per_attention: f64,
}

pub fn full_report(
    params: &SystemParams,
    t_los: f64,
    cost_per_attention: f64,
) -> Result<ServiceReport> {
    params.require_stable()?;
    let t_los = check_time("t_los", t_los)?;
    let rate = wait_rate(params)?;
    let p_occup = p_occupation(params)?;
    let queue = queue_stats(params)?;
    let p_busy = p_server_busy(params)?;
    Ok(ServiceReport {
        servers: params.servers(),
        rho: params.rho(),
        wait_rate: rate,
        mean_wait: 1.0 / rate,
        mean_wait_unconditional: p_occup / rate,
        mean_queue_len: queue.mean_len,
        std_queue_len: queue.std_len,
        los: los_from(p_occup, rate, t_los),
        t_los,
        p_busy,
        p_occup,
        throughput: params.service_rate() * f64::from(params.servers()) * p_busy,
        cost_rate: cost_rate(params, cost_per_attention)?,
        cost_per_attention,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_case() -> SystemParams {
        SystemParams::new(15.0, 50.0, 6).unwrap()
    }

    fn grid() -> Vec<SystemParams> {
        let mut out = Vec::new();
        for m in 1..=30u32 {
            for rho in [0.1, 0.2, 0.3, 0.4, 0.5, 0.5556, 0.6, 0.7, 0.8, 0.9, 0.95] {
                for t_call in [1.0, 15.0] {
                    out.push(SystemParams::new(t_call, t_call * rho * f64::from(m), m).unwrap());
                }
            }
        }
        out
    }

    // Composite Simpson on [0, upper] with `n` (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, upper: f64, n: usize) -> f64 {
        let h = upper / n as f64;
        let mut s = f(0.0) + f(upper);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    }

    // Geometric mixture of Gamma densities, truncated at k = k_max.
    fn mixture(t: f64, p: &SystemParams, k_max: u64) -> f64 {
        let rho = p.rho();
        (0..=k_max)
            .map(|k| (1.0 - rho) * rho.powi(k as i32) * gamma_wait_density(t, k, p).unwrap())
            .sum()
    }

    #[test]
    fn gamma_density_cases() {
        let p = base_case();
        let alpha = 0.12;
        for t in [0.0, 1.0, 7.5, 40.0] {
            let v = gamma_wait_density(t, 0, &p).unwrap();
            assert!((v - alpha * (-alpha * t).exp()).abs() < 1e-15);
        }
        assert_eq!(gamma_wait_density(0.0, 1, &p).unwrap(), 0.0);
        assert!(gamma_wait_density(-1.0, 0, &p).is_err());
    }

    #[test]
    fn gamma_density_normalized_with_mean() {
        let p = base_case();
        let alpha = 0.12;
        for k in 0..20u64 {
            let upper = (k as f64 + 1.0) / alpha * 20.0 + 400.0;
            let mass = simpson(|t| gamma_wait_density(t, k, &p).unwrap(), upper, 20_000);
            assert!((mass - 1.0).abs() < 1e-9, "k={k}: {mass}");
        }
        let upper = 600.0;
        let mean = simpson(|t| t * gamma_wait_density(t, 2, &p).unwrap(), upper, 20_000);
        assert!((mean - 3.0 / alpha).abs() < 1e-8);
    }

    #[test]
    fn wait_density_examples() {
        let p = base_case();
        let at0 = wait_density(0.0, &p).unwrap();
        assert!((at0 - 4.0 / 9.0 * 0.12).abs() < 1e-15);
        assert!((at0 - 0.05333).abs() < 1e-5);
        let mw = mean_wait(&p).unwrap();
        assert!((mixture(mw, &p, 200) - wait_density(mw, &p).unwrap()).abs() < 1e-10);
        let mass = simpson(|t| wait_density(t, &p).unwrap(), 1500.0, 20_000);
        assert!((mass - 1.0).abs() < 1e-9);
        let unstable = SystemParams::new(15.0, 50.0, 3).unwrap();
        assert!(wait_density(0.0, &unstable).is_err());
    }

    #[test]
    fn mixture_reduces_to_exponential() {
        // At ρ = 0.95 the k > 200 terms still carry ~1e-9 near t = 10·⟨T⟩,
        // so the truncation point grows with ρ.
        for (rho, k_max) in [(0.3, 200), (5.0 / 9.0, 200), (0.9, 200), (0.95, 400)] {
            let p = SystemParams::new(15.0, 15.0 * 6.0 * rho, 6).unwrap();
            let mw = mean_wait(&p).unwrap();
            for i in 0..50 {
                let t = 10.0 * mw * f64::from(i) / 49.0;
                let diff = (mixture(t, &p, k_max) - wait_density(t, &p).unwrap()).abs();
                assert!(diff < 1e-10, "rho={rho} t={t}: {diff}");
            }
        }
    }

    #[test]
    fn mean_wait_examples() {
        assert!((mean_wait(&base_case()).unwrap() - 18.75).abs() < 1e-12);
        let idle = SystemParams::new(1e12, 50.0, 1).unwrap();
        assert!((mean_wait(&idle).unwrap() - 50.0).abs() < 1e-6);
        let four = SystemParams::new(15.0, 50.0, 4).unwrap();
        let l = queue_stats(&four).unwrap().mean_len;
        assert!((l / four.arrival_rate() - 75.0).abs() < 1e-9);
        assert!((mean_wait(&four).unwrap() - 75.0).abs() < 1e-9);
    }

    #[test]
    fn level_of_service_examples() {
        let p = base_case();
        let los = level_of_service(&p, 30.0).unwrap();
        let p_occup = p_occupation(&p).unwrap();
        assert!((los - (1.0 - p_occup * (-1.6f64).exp())).abs() < 1e-12);
        assert!((los - 0.9701).abs() < 1e-4);
        assert!((level_of_service(&p, 0.0).unwrap() - (1.0 - p_occup)).abs() < 1e-15);
        assert_eq!(los_from(0.0, 0.05, 30.0), 1.0);
        assert!(level_of_service(&p, -1.0).is_err());
    }

    #[test]
    fn los_monotone() {
        let p = base_case();
        let values: Vec<f64> = (0..100)
            .map(|t| level_of_service(&p, f64::from(t)).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] >= w[0]));
        for t_los in [5.0, 10.0, 30.0, 60.0] {
            let by_m: Vec<f64> = (4..=15)
                .map(|m| {
                    level_of_service(&SystemParams::new(15.0, 50.0, m).unwrap(), t_los).unwrap()
                })
                .collect();
            assert!(by_m.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn identities_over_grid() {
        for p in grid() {
            let q = queue_stats(&p).unwrap();
            let mw = mean_wait(&p).unwrap();
            assert!(
                ((mw - q.mean_len / p.arrival_rate()) / mw).abs() < 1e-12,
                "{p:?}"
            );
            assert!(
                (p_server_busy(&p).unwrap() - p.rho()).abs() < 1e-12,
                "{p:?}"
            );
            let thr = throughput(&p).unwrap();
            assert!(
                ((thr - p.arrival_rate()) / p.arrival_rate()).abs() < 1e-12,
                "{p:?}"
            );
        }
    }

    #[test]
    fn busy_and_cost_examples() {
        let half = SystemParams::new(2.0, 1.0, 1).unwrap();
        assert!((p_server_busy(&half).unwrap() - 0.5).abs() < 1e-15);
        assert!((throughput(&half).unwrap() - 0.5).abs() < 1e-15);
        assert!((p_server_busy(&base_case()).unwrap() - 0.5556).abs() < 1e-4);
        assert!((throughput(&base_case()).unwrap() * 60.0 - 4.0).abs() < 1e-12);

        assert_eq!(cost_rate(&base_case(), 0.0).unwrap(), 0.0);
        let c = cost_rate(&base_case(), 100.0).unwrap();
        assert!((c - 100.0 * 0.02 * 5.0 / 9.0).abs() < 1e-12);
        assert!((c - 1.111).abs() < 1e-3);
        let unit = SystemParams::new(2.0, 1.0, 1).unwrap();
        assert!((cost_rate(&unit, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(cost_rate(&base_case(), -1.0).is_err());
    }

    #[test]
    fn report_fields_are_consistent() {
        let r = full_report(&base_case(), 30.0, 0.0).unwrap();
        assert!((r.p_occup - 0.1482).abs() < 1e-4);
        assert!((r.mean_wait - 18.75).abs() < 1e-12);
        assert!((r.los - 0.970).abs() < 1e-3);
        assert!((r.p_busy - 0.5556).abs() < 1e-4);
        assert!((r.mean_wait * r.wait_rate - 1.0).abs() < 1e-12);
        assert!((r.los - (1.0 - r.p_occup * (-r.wait_rate * r.t_los).exp())).abs() < 1e-15);
        assert!((r.throughput - 0.02 * 6.0 * r.p_busy).abs() < 1e-12);
        assert!((r.throughput - 1.0 / 15.0).abs() < 1e-12);
        assert!((r.mean_wait_unconditional - r.p_occup * r.mean_wait).abs() < 1e-12);

        let unstable = SystemParams::new(15.0, 50.0, 3).unwrap();
        assert!(matches!(
            full_report(&unstable, 30.0, 0.0),
            Err(Error::NoSteadyState { .. })
        ));
    }
}
