use std::io::Write;

use emsq::fmt::significant;
use emsq::mfpt::{mfpt_critical_profile, mfpt_sweep, write_sweep_csv, MfptProfile};
use emsq::service::{full_report, level_of_service, ServiceReport};
use emsq::sim::{
    simulate_hitting_time, simulate_mean_hitting_time, simulate_stationary, AssignmentPolicy,
    SimConfig, SimEstimate, StationaryEstimates,
};
use emsq::sizing::{min_fleet, SizingCriterion, SizingQuery};
use emsq::stationary::{queue_conditional_pmf, stationary_profile};
use emsq::{SystemParams, Workload};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::Scenario;
use crate::error::{CliError, EXIT_NOT_FOUND, EXIT_NO_STEADY_STATE};
use crate::output::OutDir;
use crate::{
    parse_grid, parse_range, AnalyzeArgs, MfptArgs, PolicyArg, SimMode, SimulateArgs, SizeArgs,
};

pub const METRICS_CSV_HEADER: &str =
    "servers,rho,p_occup,p_busy,los,one_minus_los,mean_queue_len,std_queue_len,mean_wait_min";
pub const LOS_CSV_HEADER: &str = "servers,t_los_min,los";
pub const WAITS_CSV_HEADER: &str = "call_index,wait_min";

/// Minutes, or hours with `--hours`.
struct Clock {
    hours: bool,
}

impl Clock {
    fn show(&self, minutes: f64) -> String {
        if self.hours {
            format!("{} h", significant(minutes / 60.0, 6))
        } else {
            format!("{} min", significant(minutes, 6))
        }
    }
}

fn unstable_error(workload: &Workload, params: &SystemParams) -> CliError {
    CliError::new(
        EXIT_NO_STEADY_STATE,
        format!(
            "no steady state for M = {}: rho = {} >= 1; the minimum stable fleet is M = {}",
            params.servers(),
            significant(params.rho(), 6),
            workload.min_stable_servers()
        ),
    )
}

fn finish(out: &OutDir) {
    for path in out.written() {
        println!("wrote {}", path.display());
    }
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let scenario = args.common.scenario_config()?.resolve(true)?;
    let clock = Clock {
        hours: args.common.hours,
    };
    for &t in &args.los_grid {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CliError::config(format!(
                "--los-grid values must be non-negative, got {t}"
            )));
        }
    }

    let mut reports: Vec<ServiceReport> = Vec::new();
    for &m in &scenario.servers {
        let params = scenario.params(m)?;
        if !params.is_stable() {
            return Err(unstable_error(&scenario.workload, &params));
        }
        reports.push(full_report(
            &params,
            scenario.t_los,
            scenario.cost_per_attention,
        )?);
    }

    let mut out = OutDir::create(&args.common.out_dir)?;
    out.write_json("report.json", &reports)?;
    out.write_with("metrics_by_fleet.csv", |buf| {
        writeln!(buf, "{METRICS_CSV_HEADER}")?;
        for r in &reports {
            writeln!(
                buf,
                "{},{},{},{},{},{},{},{},{}",
                r.servers,
                significant(r.rho, 6),
                significant(r.p_occup, 6),
                significant(r.p_busy, 6),
                significant(r.los, 6),
                significant(1.0 - r.los, 6),
                significant(r.mean_queue_len, 6),
                significant(r.std_queue_len, 6),
                significant(r.mean_wait, 6),
            )?;
        }
        Ok(())
    })?;
    if !args.los_grid.is_empty() {
        let mut rows = Vec::new();
        for &m in &scenario.servers {
            let params = scenario.params(m)?;
            for &t in &args.los_grid {
                rows.push((m, t, level_of_service(&params, t)?));
            }
        }
        out.write_with("los_by_fleet.csv", |buf| {
            writeln!(buf, "{LOS_CSV_HEADER}")?;
            for (m, t, los) in &rows {
                writeln!(buf, "{},{},{}", m, significant(*t, 6), significant(*los, 6))?;
            }
            Ok(())
        })?;
    }
    if args.stationary_csv {
        for &m in &scenario.servers {
            let profile = stationary_profile(&scenario.params(m)?)?;
            out.write_with(&format!("stationary_M{m}.csv"), |buf| {
                profile.write_csv(buf)
            })?;
        }
    }

    println!(
        "T_C = {}, T_S = {}, T_LOS = {}",
        clock.show(scenario.workload.t_call()),
        clock.show(scenario.workload.t_service()),
        clock.show(scenario.t_los)
    );
    for r in &reports {
        println!(
            "M = {:>3}  rho = {:.4}  P(occup) = {:.4}  P(busy) = {:.4}  LOS = {:.4}  <L> = {:.3}  wait = {}",
            r.servers,
            r.rho,
            r.p_occup,
            r.p_busy,
            r.los,
            r.mean_queue_len,
            clock.show(r.mean_wait)
        );
    }
    finish(&out);
    Ok(())
}

#[derive(Serialize)]
struct ProfileRecord<'a> {
    servers: u32,
    t_call_min: f64,
    t_service_min: f64,
    #[serde(flatten)]
    profile: &'a MfptProfile,
}

pub fn mfpt(args: &MfptArgs) -> Result<(), CliError> {
    let mut config = args.common.scenario_config()?;
    let grid = match (&args.t_call_grid, &args.t_call_range) {
        (Some(text), _) => Some(parse_grid(text)?),
        (None, Some(text)) => Some(parse_range(text)?),
        (None, None) => None,
    };
    if let Some(grid) = grid {
        config.sweep = Some(crate::config::SweepSettings { t_call_grid: grid });
    }
    if config.t_call_min.is_none() {
        if let Some(first) = config.sweep.as_ref().and_then(|s| s.t_call_grid.first()) {
            config.t_call_min = Some(*first);
        }
    }
    let scenario = config.resolve(true)?;
    let clock = Clock {
        hours: args.common.hours,
    };

    let profiles: Vec<(u32, MfptProfile)> = scenario
        .servers
        .iter()
        .map(|&m| Ok((m, mfpt_critical_profile(&scenario.params(m)?))))
        .collect::<Result<_, CliError>>()?;
    let sweep = match &scenario.t_call_grid {
        Some(grid) => Some(mfpt_sweep(
            scenario.workload.t_service(),
            &scenario.servers,
            grid,
        )?),
        None => None,
    };

    let mut out = OutDir::create(&args.common.out_dir)?;
    let records: Vec<ProfileRecord> = profiles
        .iter()
        .map(|(m, profile)| ProfileRecord {
            servers: *m,
            t_call_min: scenario.workload.t_call(),
            t_service_min: scenario.workload.t_service(),
            profile,
        })
        .collect();
    out.write_json("mfpt.json", &records)?;
    if let Some(rows) = &sweep {
        out.write_with("mfpt_sweep.csv", |buf| write_sweep_csv(rows, buf))?;
    }

    for (m, profile) in &profiles {
        println!("M = {m}: <T> = {}", clock.show(profile.mean_time));
        for (n, t) in profile.times.iter().enumerate() {
            println!("  T({n}) = {}", clock.show(*t));
        }
    }
    if let Some(rows) = &sweep {
        println!("sweep: {} grid points", rows.len());
    }
    finish(&out);
    Ok(())
}

pub fn size(args: &SizeArgs) -> Result<(), CliError> {
    let scenario = args.common.scenario_config()?.resolve(false)?;
    let criterion = if args.stability {
        SizingCriterion::Stability
    } else if let Some(target) = args.occup_max {
        SizingCriterion::OccupCeiling { target }
    } else if let Some(target) = args.los_min {
        SizingCriterion::LosTarget {
            target,
            t_los: scenario.t_los,
        }
    } else if let Some(target) = args.horizon {
        SizingCriterion::MfptHorizon { target }
    } else {
        return Err(CliError::config("choose a sizing criterion"));
    };
    let query = SizingQuery::new(criterion).with_m_max(args.m_max);
    let mut out = OutDir::create(&args.common.out_dir)?;
    match min_fleet(&scenario.workload, &query) {
        Ok(answer) => {
            let doc = json!({
                "m": answer.servers,
                "predicate_value": answer.predicate_value,
                "scanned_range": answer.scanned_range,
                "query": query,
                "t_call_min": scenario.workload.t_call(),
                "t_service_min": scenario.workload.t_service(),
            });
            out.write_json("sizing.json", &doc)?;
            println!(
                "M = {} (criterion value {}, scanned M = {}..{})",
                answer.servers,
                significant(answer.predicate_value, 6),
                answer.scanned_range[0],
                answer.scanned_range[1]
            );
            finish(&out);
            Ok(())
        }
        Err(emsq::Error::FleetNotFound {
            m_max,
            best_servers,
            best_value,
        }) => {
            let doc = json!({
                "m": Value::Null,
                "best_m": best_servers,
                "predicate_value": best_value,
                "m_max": m_max,
                "query": query,
                "t_call_min": scenario.workload.t_call(),
                "t_service_min": scenario.workload.t_service(),
            });
            out.write_json("sizing.json", &doc)?;
            finish(&out);
            Err(CliError::new(
                EXIT_NOT_FOUND,
                format!(
                    "no fleet size up to {m_max} meets the target (best value {} at M = {best_servers})",
                    significant(best_value, 6)
                ),
            ))
        }
        Err(err) => Err(err.into()),
    }
}

fn sim_config(
    args: &SimulateArgs,
    scenario: &Scenario,
    params: &SystemParams,
    seed: u64,
) -> SimConfig {
    let mut config = scenario.sim_config(params, seed);
    if args.mode == SimMode::Hitting {
        if scenario.sim.replications.is_none() {
            config.replications = 10_000;
        }
        if scenario.sim.horizon.is_none() {
            config.horizon = f64::MAX;
        }
    }
    if let Some(v) = args.replications {
        config.replications = v;
    }
    if let Some(v) = args.warmup {
        config.warmup = v;
    }
    if let Some(v) = args.horizon {
        config.horizon = v;
    }
    if let Some(v) = args.start_state {
        config.start_state = v;
    }
    if let Some(v) = args.batches {
        config.batches = v;
    }
    if let Some(p) = args.policy {
        config.policy = match p {
            PolicyArg::Random => AssignmentPolicy::Random,
            PolicyArg::LowestIndex => AssignmentPolicy::LowestIndex,
        };
    }
    config.threads = args.threads;
    config.keep_waits = args.wait_samples;
    config
}

fn estimate_maps(
    named: &[(String, SimEstimate)],
) -> (Map<String, Value>, Map<String, Value>, Map<String, Value>) {
    let mut values = Map::new();
    let mut errors = Map::new();
    let mut counts = Map::new();
    for (name, e) in named {
        values.insert(name.clone(), json!(e.value));
        errors.insert(name.clone(), json!(e.std_error));
        counts.insert(name.clone(), json!(e.n_samples));
    }
    (values, errors, counts)
}

/// Analytic counterparts of the stationary estimates.
fn stationary_analytic(
    params: &SystemParams,
    est: &StationaryEstimates,
) -> Result<Vec<(String, f64)>, CliError> {
    let profile = stationary_profile(params)?;
    let report = full_report(params, est.t_los, 0.0)?;
    let mut out = Vec::new();
    for n in 0..est.pi.len() {
        out.push((format!("pi_{n}"), profile.pi(n as u64)));
    }
    out.push(("p_occup".into(), report.p_occup));
    for k in 0..est.queue_conditional_pmf.len() {
        out.push((
            format!("queue_conditional_pmf_{k}"),
            queue_conditional_pmf(params, k as u64)?,
        ));
    }
    out.push(("mean_queue_len_conditional".into(), report.mean_queue_len));
    out.push(("p_busy_per_server".into(), report.p_busy));
    for s in 0..est.server_busy.len() {
        out.push((format!("server_busy_{s}"), report.p_busy));
    }
    out.push(("throughput".into(), report.throughput));
    out.push(("wait_mean_conditional".into(), report.mean_wait));
    out.push((
        "wait_cdf_at_t_los".into(),
        1.0 - (-report.wait_rate * est.t_los).exp(),
    ));
    out.push(("queue_growth_per_min".into(), 0.0));
    Ok(out)
}

fn add_comparison(
    doc: &mut Map<String, Value>,
    named: &[(String, SimEstimate)],
    analytic: &[(String, f64)],
) {
    let mut values = Map::new();
    let mut z = Map::new();
    for ((name, e), (_, expected)) in named.iter().zip(analytic) {
        values.insert(name.clone(), json!(expected));
        let score = e.z_score(*expected);
        z.insert(
            name.clone(),
            if score.is_finite() {
                json!(score)
            } else {
                Value::Null
            },
        );
    }
    doc.insert("analytic".into(), Value::Object(values));
    doc.insert("z_scores".into(), Value::Object(z));
}

fn print_table(named: &[(String, SimEstimate)], analytic: Option<&[(String, f64)]>) {
    match analytic {
        Some(analytic) => {
            println!(
                "{:<28} {:>14} {:>14} {:>12} {:>8}",
                "quantity", "simulated", "analytic", "std_error", "z"
            );
            for ((name, e), (_, a)) in named.iter().zip(analytic) {
                let z = e.z_score(*a);
                let z = if z.is_finite() {
                    format!("{z:.2}")
                } else {
                    "-".into()
                };
                println!(
                    "{:<28} {:>14.6} {:>14.6} {:>12.3e} {:>8}",
                    name, e.value, a, e.std_error, z
                );
            }
        }
        None => {
            println!("{:<28} {:>14} {:>12}", "quantity", "simulated", "std_error");
            for (name, e) in named {
                println!("{:<28} {:>14.6} {:>12.3e}", name, e.value, e.std_error);
            }
        }
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let scenario = args.common.scenario_config()?.resolve(true)?;
    let [m] = scenario.servers[..] else {
        return Err(CliError::config(
            "simulate takes exactly one fleet size (--servers)",
        ));
    };
    if args.threads == Some(0) {
        return Err(CliError::config("--threads must be at least 1"));
    }
    let seed = match scenario.sim.seed {
        Some(seed) => seed,
        None if args.strict => {
            return Err(CliError::config("--strict requires an explicit --seed"));
        }
        None => rand::random(),
    };
    let params = scenario.params(m)?;
    if args.mode == SimMode::Stationary && !params.is_stable() && !args.allow_unstable {
        let mut err = unstable_error(&scenario.workload, &params);
        err.message
            .push_str(" (use --allow-unstable to simulate anyway)");
        return Err(err);
    }
    let config = sim_config(args, &scenario, &params, seed);
    config.validate()?;

    let mut echo = json!({
        "mode": match args.mode { SimMode::Stationary => "stationary", SimMode::Hitting => "hitting" },
        "t_call_min": scenario.workload.t_call(),
        "t_service_min": scenario.workload.t_service(),
        "servers": m,
        "t_los_min": scenario.t_los,
    });
    if let (Value::Object(map), Value::Object(sim)) = (&mut echo, serde_json::to_value(&config)?) {
        map.extend(sim);
    }

    let mut doc = Map::new();
    let mut out = OutDir::create(&args.common.out_dir)?;
    let clock = Clock {
        hours: args.common.hours,
    };
    match args.mode {
        SimMode::Stationary => {
            let est = simulate_stationary(&params, &config, scenario.t_los)?;
            let named = est.named();
            let (values, errors, counts) = estimate_maps(&named);
            doc.insert("config".into(), echo);
            doc.insert("estimates".into(), Value::Object(values));
            doc.insert("std_errors".into(), Value::Object(errors));
            doc.insert("n_samples".into(), Value::Object(counts));
            doc.insert("unstable".into(), json!(est.unstable));
            let analytic = if args.compare && params.is_stable() {
                let analytic = stationary_analytic(&params, &est)?;
                add_comparison(&mut doc, &named, &analytic);
                Some(analytic)
            } else {
                None
            };
            out.write_json("sim.json", &doc)?;
            if args.wait_samples {
                out.write_with("waits.csv", |buf| {
                    writeln!(buf, "{WAITS_CSV_HEADER}")?;
                    for (i, w) in est.waits.iter().enumerate() {
                        writeln!(buf, "{i},{}", significant(*w, 6))?;
                    }
                    Ok(())
                })?;
            }
            print_table(&named, analytic.as_deref());
            println!(
                "conditional mean wait {} ± {}",
                clock.show(est.wait_mean_conditional.value),
                clock.show(est.wait_mean_conditional.std_error)
            );
            if est.unstable {
                println!(
                    "rho = {} >= 1: queue grows by {} calls per hour",
                    significant(params.rho(), 6),
                    significant(est.queue_growth_per_min.value * 60.0, 4)
                );
            }
        }
        SimMode::Hitting => {
            let mut named = Vec::new();
            named.push((
                "mean_time_to_critical".to_string(),
                simulate_mean_hitting_time(&params, &config)?,
            ));
            for start in 0..=u64::from(m) {
                named.push((
                    format!("time_to_critical_from_{start}"),
                    simulate_hitting_time(&params, start, &config)?,
                ));
            }
            let (values, errors, counts) = estimate_maps(&named);
            doc.insert("config".into(), echo);
            doc.insert("estimates".into(), Value::Object(values));
            doc.insert("std_errors".into(), Value::Object(errors));
            doc.insert("n_samples".into(), Value::Object(counts));
            let analytic = if args.compare {
                let profile = mfpt_critical_profile(&params);
                let mut a = vec![("mean_time_to_critical".to_string(), profile.mean_time)];
                for (n, t) in profile.times.iter().enumerate() {
                    a.push((format!("time_to_critical_from_{n}"), *t));
                }
                add_comparison(&mut doc, &named, &a);
                Some(a)
            } else {
                None
            };
            out.write_json("sim.json", &doc)?;
            print_table(&named, analytic.as_deref());
            println!("<T> = {}", clock.show(named[0].1.value));
        }
    }
    finish(&out);
    Ok(())
}
