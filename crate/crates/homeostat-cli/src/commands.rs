//! Command implementations shared by the binary and the test suite.

use crate::builtins::{self, Builtin, SweepSpec};
use crate::csv::write_trace_csv;
use crate::error::CliError;
use homeostat_core::device::{calibrate_vg_for_slope, DeviceParams};
use homeostat_core::engine::run;
use homeostat_core::neuron::{calibrate_rate_points, NeuronParams};
use homeostat_core::agc::LlcParams;
use homeostat_core::scenario::{Mode, Scenario};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Parse and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let sc: Scenario = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    sc.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(sc)
}

/// Resolve the run source: exactly one of a scenario file or a builtin
/// token.
pub fn resolve_source(
    scenario: Option<&Path>,
    builtin: Option<&str>,
) -> Result<Builtin, CliError> {
    match (scenario, builtin) {
        (Some(p), None) => Ok(Builtin::Single(load_scenario(p)?)),
        (None, Some(b)) => builtins::by_name(b).ok_or_else(|| {
            CliError::Config(format!(
                "unknown builtin {b:?}; available: {}, {}",
                builtins::STEP_RESPONSE,
                builtins::TIMESCALE_SWEEP
            ))
        }),
        (Some(_), Some(_)) => Err(CliError::Config(
            "--scenario and --builtin are mutually exclusive".into(),
        )),
        (None, None) => Err(CliError::Config(
            "one of --scenario or --builtin is required".into(),
        )),
    }
}

/// Sweep parallelism cap: `HOMEOSTAT_THREADS` when set, machine cores
/// otherwise.
pub fn thread_cap() -> Result<usize, CliError> {
    match std::env::var("HOMEOSTAT_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Config(format!(
                "HOMEOSTAT_THREADS must be a positive integer, found {s:?}"
            ))),
        },
        Err(std::env::VarError::NotPresent) => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
        Err(e) => Err(CliError::Config(format!("HOMEOSTAT_THREADS: {e}"))),
    }
}

/// Run one scenario and write its trace. Returns the stdout summary line.
pub fn run_to_csv(sc: &Scenario, out: &Path) -> Result<String, CliError> {
    let trace = run(sc)?;
    write_trace_csv(out, &trace, &[])?;
    Ok(format!(
        "rows={} events={} out={}",
        trace.rows.len(),
        trace.events.len(),
        out.display()
    ))
}

/// Where the trace of sweep member `idx` goes: `<stem>.s<idx>.<ext>`.
pub fn sweep_member_path(out: &Path, idx: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("sweep");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}.s{idx}.{ext}"))
}

/// Run every sweep member (up to `threads` at a time), write one CSV per
/// member, and return the per-member stdout lines in value order. A failed
/// member does not stop the others; the first failure is returned after
/// the whole sweep has been attempted.
pub fn sweep_to_csv(spec: &SweepSpec, out: &Path, threads: usize) -> Result<Vec<String>, CliError> {
    let n = spec.values.len();
    if n == 0 {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<String, CliError>>>> =
        Mutex::new((0..n).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..threads.min(n) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= n {
                    break;
                }
                let value = spec.values[idx];
                let path = sweep_member_path(out, idx);
                let outcome = (|| -> Result<String, CliError> {
                    let mut sc = spec.base.clone();
                    sc.apply_param(&spec.param, value)
                        .map_err(|e| CliError::Config(e.to_string()))?;
                    let trace = run(&sc)?;
                    let comment = format!("# sweep {} = {:.16e}", spec.param, value);
                    write_trace_csv(&path, &trace, &[comment])?;
                    let s = trace.summary();
                    Ok(format!(
                        "member={idx} {}={:.6e} recovery_s={} final_rate_hz={:.3} out={}",
                        spec.param,
                        value,
                        s.recovery_time
                            .map_or_else(|| "none".to_string(), |r| format!("{r:.3}")),
                        s.final_rate,
                        path.display()
                    ))
                })();
                results.lock().unwrap()[idx] = Some(outcome);
            });
        }
    });

    let collected = results.into_inner().unwrap();
    let mut lines = Vec::with_capacity(n);
    let mut first_err: Option<CliError> = None;
    for (idx, slot) in collected.into_iter().enumerate() {
        match slot.expect("every member was attempted") {
            Ok(line) => lines.push(line),
            Err(e) => {
                lines.push(format!("member={idx} failed: {e}"));
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    match first_err {
        None => Ok(lines),
        Some(e) => {
            for l in &lines {
                eprintln!("{l}");
            }
            Err(e)
        }
    }
}

/// `run` entry point: single scenarios write one CSV, families fan out.
pub fn cmd_run(
    scenario: Option<&Path>,
    builtin: Option<&str>,
    mode: Option<Mode>,
    out: &Path,
) -> Result<Vec<String>, CliError> {
    match resolve_source(scenario, builtin)? {
        Builtin::Single(mut sc) => {
            if let Some(m) = mode {
                sc.mode = m;
            }
            Ok(vec![run_to_csv(&sc, out)?])
        }
        Builtin::Family(mut spec) => {
            if let Some(m) = mode {
                spec.base.mode = m;
            }
            sweep_to_csv(&spec, out, thread_cap()?)
        }
    }
}

/// `sweep` entry point. Scenario files need an explicit parameter path and
/// value list; the family builtin carries its own and rejects overrides.
pub fn cmd_sweep(
    scenario: Option<&Path>,
    builtin: Option<&str>,
    param: Option<String>,
    values: Option<Vec<f64>>,
    mode: Option<Mode>,
    out: &Path,
) -> Result<Vec<String>, CliError> {
    let mut spec = match resolve_source(scenario, builtin)? {
        Builtin::Single(base) => {
            let param = param.ok_or_else(|| {
                CliError::Config("sweeping this source needs --param".into())
            })?;
            let values = values.ok_or_else(|| {
                CliError::Config("sweeping this source needs --values".into())
            })?;
            SweepSpec { base, param, values }
        }
        Builtin::Family(spec) => {
            if param.is_some() || values.is_some() {
                return Err(CliError::Config(
                    "this builtin is a fixed family; --param/--values do not apply".into(),
                ));
            }
            spec
        }
    };
    if let Some(m) = mode {
        spec.base.mode = m;
    }
    sweep_to_csv(&spec, out, thread_cap()?)
}

/// Parse one "rate@current" token.
fn parse_rate_point(tok: &str) -> Result<(f64, f64), CliError> {
    let (f, i) = tok.split_once('@').ok_or_else(|| {
        CliError::Config(format!("rate point {tok:?} must look like 100@20e-9"))
    })?;
    let parse = |s: &str, what: &str| -> Result<f64, CliError> {
        s.trim()
            .parse()
            .map_err(|e| CliError::Config(format!("{what} in {tok:?}: {e}")))
    };
    Ok((parse(f, "rate")?, parse(i, "current")?))
}

/// `calibrate` entry point; returns the JSON fragment to print.
pub fn cmd_calibrate(
    rate_points: Option<&str>,
    slope: Option<f64>,
) -> Result<String, CliError> {
    match (rate_points, slope) {
        (Some(points), None) => {
            let toks: Vec<&str> = points.split(',').collect();
            if toks.len() != 2 {
                return Err(CliError::Config(format!(
                    "exactly two rate points are needed, found {}",
                    toks.len()
                )));
            }
            let (f1, i1) = parse_rate_point(toks[0])?;
            let (f2, i2) = parse_rate_point(toks[1])?;
            let cal = calibrate_rate_points(f1, i1, f2, i2)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let delta_v = NeuronParams::default().delta_v;
            let fragment = serde_json::json!({
                "neuron": {
                    "t_ref": cal.t_ref,
                    "c_mem": cal.charge / delta_v,
                    "delta_v": delta_v,
                }
            });
            Ok(serde_json::to_string_pretty(&fragment).expect("plain floats"))
        }
        (None, Some(slope)) => {
            if !(slope.is_finite() && slope > 0.0) {
                return Err(CliError::Config(format!(
                    "--slope must be a positive ramp magnitude in V/s, found {slope}"
                )));
            }
            let dev = DeviceParams::default();
            let llc = LlcParams::default();
            let v_g = calibrate_vg_for_slope(slope, llc.c_f, llc.v_ref_l, llc.v_ref_m, &dev)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let fragment = serde_json::json!({ "llc": { "v_g": v_g } });
            Ok(serde_json::to_string_pretty(&fragment).expect("plain floats"))
        }
        (Some(_), Some(_)) => Err(CliError::Config(
            "--rate-points and --slope are mutually exclusive".into(),
        )),
        (None, None) => Err(CliError::Config(
            "one of --rate-points or --slope is required".into(),
        )),
    }
}
