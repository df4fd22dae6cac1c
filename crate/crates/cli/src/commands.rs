//! The four subcommands. Each returns the process exit code on success and
//! a `CliError` (which carries its own exit code) on failure.

use std::fs;
use std::path::Path;
use std::time::Instant;

use hierlyap::certify::{
    assess, build_structure_matrix, equilibrium_of, is_diagonally_dominant, lyapunov_value,
    resilience_sweep, AssessOptions, MatrixKind,
};
use hierlyap::gains::build_gain_set;
use hierlyap::simulate::{integrate, validate_certificate, SimConfig, Trajectory};
use nalgebra::DVector;
use serde::Serialize;

use crate::config::{load_config, ring_config, NetworkConfig};
use crate::error::{CliError, EXIT_NOT_CERTIFIED};
use crate::report::{build_report, kind_name, reason_name, write_json};

/// Accepts either inline comma-separated numbers or a path to a file holding
/// a numeric array.
fn parse_x0(arg: &str) -> Result<DVector<f64>, CliError> {
    let inline: Result<Vec<f64>, _> = arg.split(',').map(|p| p.trim().parse::<f64>()).collect();
    if let Ok(values) = inline {
        return Ok(DVector::from_vec(values));
    }
    let text = fs::read_to_string(arg).map_err(|e| {
        CliError::parse(format!(
            "--x0 {arg}: neither inline comma-separated numbers nor a readable file ({e})"
        ))
    })?;
    let values: Vec<f64> = serde_json::from_str(&text)
        .map_err(|e| CliError::parse(format!("--x0 file {arg}: expected a numeric array: {e}")))?;
    if values.is_empty() {
        return Err(CliError::parse(format!("--x0 file {arg}: array is empty")));
    }
    Ok(DVector::from_vec(values))
}

fn require_x0(arg: Option<&str>, config: &NetworkConfig) -> Result<DVector<f64>, CliError> {
    if let Some(arg) = arg {
        return parse_x0(arg);
    }
    config.initial_state_vector().ok_or_else(|| {
        CliError::parse("no initial state: pass --x0 or set initial_state in the config")
    })
}

fn assess_kind(robust: bool) -> MatrixKind {
    if robust {
        MatrixKind::Robust
    } else {
        MatrixKind::Nominal
    }
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn cmd_assess(
    config_path: &Path,
    robust: bool,
    x0_arg: Option<&str>,
    out: Option<&Path>,
) -> Result<u8, CliError> {
    let t_parse = Instant::now();
    let config = load_config(config_path)?;
    let net = config.to_network()?;
    let seed = config.resolved_seed()?;
    let x0 = require_x0(x0_arg, &config)?;
    let parse_ms = ms_since(t_parse);

    let kind = assess_kind(robust);
    let t_gains = Instant::now();
    let gains = build_gain_set(&net, seed)?;
    let m = build_structure_matrix(&gains, kind);
    let (dominant, margins) = is_diagonally_dominant(&m);
    let gains_ms = ms_since(t_gains);

    let t_assess = Instant::now();
    let opts = AssessOptions {
        kind,
        seed,
        ..Default::default()
    };
    let verdict = assess(&net, &x0, &opts)?;
    let assess_ms = ms_since(t_assess);

    let x_star = equilibrium_of(&gains);
    let initial_storage = verdict
        .certificate
        .as_ref()
        .map(|cert| lyapunov_value(&x0, &cert.c, &gains, &x_star));

    println!(
        "network: {} subsystems, {} couplings, state dimension {}",
        net.subsystem_count(),
        net.couplings().len(),
        net.total_dim()
    );
    let worst = margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "structure matrix ({}): rows {}dominant, worst row margin {:.6e}",
        kind_name(kind),
        if dominant { "" } else { "not " },
        worst
    );
    match &verdict.certificate {
        Some(cert) => {
            println!("scaling: verify_eig = {:.6e}", cert.verify_eig);
            println!(
                "certified level: v_min = {:.6e}, V(x0) = {:.6e}",
                cert.v_min,
                initial_storage.unwrap_or(f64::NAN)
            );
            if !cert.trace.is_empty() {
                println!("adaptation trace: {} steps", cert.trace.len());
            }
        }
        None => println!("scaling: none found"),
    }
    println!(
        "verdict: {} ({})",
        if verdict.certified {
            "certified"
        } else {
            "not certified"
        },
        reason_name(verdict.reason)
    );
    // Timings go to standard output only so the written report stays
    // byte-identical across runs.
    println!(
        "timings: parse {:.1} ms, gains {:.1} ms, assess {:.1} ms",
        parse_ms, gains_ms, assess_ms
    );

    if let Some(out_path) = out {
        let report = build_report(kind, seed, &verdict, dominant, margins, initial_storage);
        write_json(&report, out_path)?;
        println!("report written to {}", out_path.display());
    }
    Ok(if verdict.certified {
        0
    } else {
        EXIT_NOT_CERTIFIED
    })
}

pub fn cmd_simulate(
    config_path: &Path,
    x0_arg: Option<&str>,
    t_end: Option<f64>,
    dt: Option<f64>,
    csv: Option<&Path>,
    with_certificate: bool,
) -> Result<u8, CliError> {
    let config = load_config(config_path)?;
    let net = config.to_network()?;
    let x0 = require_x0(x0_arg, &config)?;
    let cfg = SimConfig {
        dt: dt.unwrap_or(1e-3),
        t_end: t_end.unwrap_or(5.0),
        record_every: 1,
    };

    let cert_bundle = if with_certificate {
        let seed = config.resolved_seed()?;
        let opts = AssessOptions {
            seed,
            ..Default::default()
        };
        let verdict = assess(&net, &x0, &opts)?;
        let gains = build_gain_set(&net, seed)?;
        match verdict.certificate {
            Some(cert) => {
                if !verdict.certified {
                    eprintln!(
                        "warning: state not certified ({}); storage column uses the unadapted scaling",
                        reason_name(verdict.reason)
                    );
                }
                Some((cert, gains))
            }
            None => {
                return Err(CliError::not_certified(
                    "no scaling exists for this network; cannot attach a certificate",
                ))
            }
        }
    } else {
        None
    };

    let traj = integrate(&net, &x0, &cfg, cert_bundle.as_ref().map(|(c, g)| (c, g)))?;

    if let Some(csv_path) = csv {
        write_csv(csv_path, &traj)?;
        println!(
            "csv written to {} ({} rows)",
            csv_path.display(),
            traj.times.len()
        );
    }
    let t_last = *traj.times.last().expect("trajectory has samples");
    let max_abs = traj
        .states
        .last()
        .expect("trajectory has samples")
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    println!(
        "integrated to t = {}, {} recorded samples, max |x_i| at the end = {:.6e}",
        t_last,
        traj.times.len(),
        max_abs
    );
    if let Some((cert, gains)) = &cert_bundle {
        let checks = validate_certificate(&traj, cert, gains)?;
        println!(
            "certificate checks: storage nonincreasing {}, states in validity balls {}, states in certified region {}",
            checks.v_monotone, checks.states_in_balls, checks.states_in_invariant_set
        );
        if let Some(i) = checks.first_violation {
            println!("first violation at sample {} (t = {})", i, traj.times[i]);
        }
    }
    Ok(0)
}

fn write_csv(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let n = traj.states.first().map_or(0, |s| s.len());
    let mut text = String::from("t");
    for i in 1..=n {
        text.push_str(&format!(",x_{i}"));
    }
    if traj.v_values.is_some() {
        text.push_str(",V");
    }
    text.push('\n');
    for (idx, t) in traj.times.iter().enumerate() {
        // Default float formatting is the shortest string that parses back
        // to the same double, so nothing is lost.
        text.push_str(&format!("{t}"));
        for v in traj.states[idx].iter() {
            text.push_str(&format!(",{v}"));
        }
        if let Some(v_values) = &traj.v_values {
            text.push_str(&format!(",{}", v_values[idx]));
        }
        text.push('\n');
    }
    fs::write(path, text)
        .map_err(|e| CliError::parse(format!("cannot write {}: {e}", path.display())))
}

fn check(name: &str, ok: bool, failures: &mut Vec<String>) {
    if ok {
        println!("check {name}: ok");
    } else {
        println!("check {name}: FAILED");
        failures.push(name.to_string());
    }
}

pub fn cmd_reproduce_example(out_dir: &Path, drop_link: Option<usize>) -> Result<u8, CliError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::parse(format!("cannot create {}: {e}", out_dir.display())))?;

    let mut config = ring_config();
    if let Some(k) = drop_link {
        if k >= config.couplings.len() {
            return Err(CliError::parse(format!(
                "--drop-link {k} out of range: the example has {} couplings",
                config.couplings.len()
            )));
        }
        config.couplings.remove(k);
    }
    let net = config.to_network()?;
    if drop_link.is_none() && net != hierlyap::ring::ring_network() {
        return Err(CliError::assumption(
            "generated config drifted from the built-in example network",
        ));
    }
    let seed = config.resolved_seed()?;
    let x0 = config
        .initial_state_vector()
        .expect("example config carries an initial state");

    write_json(&config, &out_dir.join("config.json"))?;

    let opts = AssessOptions {
        kind: MatrixKind::Robust,
        seed,
        ..Default::default()
    };
    let gains = build_gain_set(&net, seed)?;
    let m = build_structure_matrix(&gains, MatrixKind::Robust);
    let (dominant, margins) = is_diagonally_dominant(&m);
    let verdict = assess(&net, &x0, &opts)?;
    let x_star = equilibrium_of(&gains);
    let initial_storage = verdict
        .certificate
        .as_ref()
        .map(|cert| lyapunov_value(&x0, &cert.c, &gains, &x_star));

    let report = build_report(
        MatrixKind::Robust,
        seed,
        &verdict,
        dominant,
        margins,
        initial_storage,
    );
    write_json(&report, &out_dir.join("report.json"))?;

    let sim_cfg = SimConfig {
        dt: 1e-3,
        t_end: 5.0,
        record_every: 10,
    };
    let cert_gains = verdict.certificate.as_ref().map(|c| (c, &gains));
    let traj = integrate(&net, &x0, &sim_cfg, cert_gains)?;
    write_csv(&out_dir.join("trajectory.csv"), &traj)?;

    let mut failures = Vec::new();
    check("structure rows dominant", dominant, &mut failures);
    check(
        "scaling verified",
        verdict
            .certificate
            .as_ref()
            .is_some_and(|c| c.verify_eig < 0.0),
        &mut failures,
    );
    check("state certified", verdict.certified, &mut failures);
    let admitted = match (&verdict.certificate, initial_storage) {
        (Some(cert), Some(v)) => v < cert.v_min,
        _ => false,
    };
    check(
        "initial storage below certified level",
        admitted,
        &mut failures,
    );
    check(
        "final states below 1e-3",
        traj.states
            .last()
            .is_some_and(|s| s.iter().all(|v| v.abs() < 1e-3)),
        &mut failures,
    );
    if let (Some(cert), true) = (verdict.certificate.as_ref(), traj.v_values.is_some()) {
        let checks = validate_certificate(&traj, cert, &gains)?;
        check("storage nonincreasing", checks.v_monotone, &mut failures);
        check(
            "states inside validity balls",
            checks.states_in_balls,
            &mut failures,
        );
        check(
            "states inside certified region",
            checks.states_in_invariant_set,
            &mut failures,
        );
    } else {
        check("storage nonincreasing", false, &mut failures);
        check("states inside validity balls", false, &mut failures);
        check("states inside certified region", false, &mut failures);
    }

    if failures.is_empty() {
        println!(
            "example reproduced: config.json, report.json, trajectory.csv in {}",
            out_dir.display()
        );
        Ok(0)
    } else {
        for name in &failures {
            eprintln!("failed check: {name}");
        }
        Ok(EXIT_NOT_CERTIFIED)
    }
}

#[derive(Serialize)]
struct ResilienceRow<'a> {
    removed: &'a [usize],
    certified: bool,
    reason: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_min: Option<f64>,
}

pub fn cmd_resilience(
    config_path: &Path,
    single_links: bool,
    subsets: Option<&Path>,
    robust: bool,
    out: Option<&Path>,
) -> Result<u8, CliError> {
    let config = load_config(config_path)?;
    let net = config.to_network()?;
    let seed = config.resolved_seed()?;

    let subset_list: Vec<Vec<usize>> = if single_links {
        (0..net.couplings().len()).map(|i| vec![i]).collect()
    } else if let Some(path) = subsets {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::parse(format!(
                "{}: expected a list of coupling-index lists: {e}",
                path.display()
            ))
        })?
    } else {
        return Err(CliError::parse(
            "pass exactly one of --single-links or --subsets <path>",
        ));
    };

    let x0 = config.initial_state_vector();
    let opts = AssessOptions {
        kind: assess_kind(robust),
        seed,
        ..Default::default()
    };
    let verdicts = resilience_sweep(&net, &subset_list, x0.as_ref(), &opts)?;

    println!(
        "{:<16} {:<10} {:<22} v_min",
        "removed", "certified", "reason"
    );
    for (subset, verdict) in subset_list.iter().zip(&verdicts) {
        let label = if subset.is_empty() {
            "(none)".to_string()
        } else {
            subset
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        let v_min = verdict
            .certificate
            .as_ref()
            .map_or_else(|| "-".to_string(), |c| format!("{:.6e}", c.v_min));
        println!(
            "{:<16} {:<10} {:<22} {}",
            label,
            if verdict.certified { "yes" } else { "no" },
            reason_name(verdict.reason),
            v_min
        );
    }
    let certified_count = verdicts.iter().filter(|v| v.certified).count();
    println!(
        "{} of {} subsets certified",
        certified_count,
        verdicts.len()
    );

    if let Some(out_path) = out {
        let rows: Vec<ResilienceRow> = subset_list
            .iter()
            .zip(&verdicts)
            .map(|(subset, verdict)| ResilienceRow {
                removed: subset,
                certified: verdict.certified,
                reason: reason_name(verdict.reason),
                v_min: verdict.certificate.as_ref().map(|c| c.v_min),
            })
            .collect();
        write_json(&rows, out_path)?;
        println!("results written to {}", out_path.display());
    }

    Ok(if certified_count == verdicts.len() {
        0
    } else {
        EXIT_NOT_CERTIFIED
    })
}
