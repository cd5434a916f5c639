//! The six scenario runners behind the subcommands. Each resolves its
//! configuration (recording every key), writes its artifacts, and returns
//! the results object embedded in the summary JSON.

use std::path::Path;
use std::sync::Mutex;

use serde_json::{json, Value};

use kgstab_core::moments::basis;
use kgstab_core::radial::h1_norm;
use kgstab_core::spectral::{
    asymptotic_line, find_imaginary_poles, find_poles_in_strip, StripOptions,
};
use kgstab_core::timedomain::{
    closed_loop_run, interior_bump_state, measure_decay_rate, mode_state, open_loop_stabilize,
    simulate, ClosedLoopConfig, DecayFit, OpenLoopConfig, SimOptions, WaveProblem,
};
use kgstab_core::{Error as CoreError, RadialGrid, RadialState, ScalingDirection, ScalingMap};

use crate::artifacts::{emit_history_plots, write_history_csv, write_poles_csv, write_summary};
use crate::config::{check_beta, fmt_f64, io_err, resolve_geometry, CliError, Config, Result};

/// Runs one named scenario into `out`, writes its summary, and returns the
/// results object.
pub fn execute(name: &str, cfg: &mut Config, out: &Path) -> Result<Value> {
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let started = std::time::Instant::now();
    let (artifacts, mut results) = match name {
        "poles" => run_poles(cfg, out)?,
        "instability" => run_instability(cfg, out)?,
        "open-loop" => run_open_loop(cfg, out)?,
        "closed-loop" => run_closed_loop(cfg, out)?,
        "verify" => run_verify(cfg, out)?,
        "sweep" => run_sweep(cfg, out)?,
        other => return Err(CliError::Config(format!("unknown scenario `{other}`"))),
    };
    if let Value::Object(map) = &mut results {
        map.insert("elapsed_s".into(), json!(started.elapsed().as_secs_f64()));
    }
    let summary = write_summary(out, name, cfg, &artifacts, results.clone())?;
    println!("{name}: wrote {} artifact(s) and {}", artifacts.len(), summary.display());
    Ok(results)
}

fn rate_to_original(rate: f64) -> f64 {
    ScalingMap::new(ScalingDirection::ScaledToOriginal).convert_rate(rate)
}

fn fit_json(fit: &Option<DecayFit>) -> Value {
    match fit {
        None => Value::Null,
        Some(f) => json!({
            "rate": f.rate,
            "rate_original": rate_to_original(f.rate),
            "r_squared": f.r_squared,
            "window": [f.window.0, f.window.1],
        }),
    }
}

fn initial_state(
    kind: &str,
    grid: &RadialGrid,
    l: f64,
    a: f64,
    amplitude: f64,
) -> Result<RadialState> {
    match kind {
        "mode" => {
            let roots = find_imaginary_poles(l, a)?;
            let s = *roots.first().ok_or_else(|| {
                CliError::Core(CoreError::NonConvergence {
                    what: "imaginary pole search",
                    detail: "no unstable rate found in (0, 1)".into(),
                })
            })?;
            Ok(mode_state(grid, s, amplitude)?)
        }
        _ => Ok(interior_bump_state(grid, amplitude)?),
    }
}

// ---------------------------------------------------------------------------
// poles
// ---------------------------------------------------------------------------

fn run_poles(cfg: &mut Config, out: &Path) -> Result<(Vec<&'static str>, Value)> {
    let (l, a) = resolve_geometry(cfg)?;
    let line = asymptotic_line(l, a);
    let beta_max = cfg.resolve_f64("beta_max", 0.5 * line)?;
    let alpha_max = cfg.resolve_f64("alpha_max", 60.0)?;
    check_beta("beta_max", beta_max, l, a)?;

    let poles = find_poles_in_strip(l, a, beta_max, alpha_max, StripOptions::default())?;
    write_poles_csv(&out.join("poles.csv"), &poles)?;

    let list: Vec<Value> = poles
        .iter()
        .map(|p| json!({ "re": p.omega.re, "im": p.omega.im, "residual": p.char_residual }))
        .collect();
    let results = json!({
        "asymptotic_line": line,
        "count": poles.len(),
        "poles": list,
    });
    Ok((vec!["poles.csv"], results))
}

// ---------------------------------------------------------------------------
// instability
// ---------------------------------------------------------------------------

fn run_instability(cfg: &mut Config, out: &Path) -> Result<(Vec<&'static str>, Value)> {
    let (l, a) = resolve_geometry(cfg)?;
    let n = cfg.resolve_usize("n", 1201)?;
    let t_end = cfg.resolve_f64("t_end", 10.0)?;
    let amplitude = cfg.resolve_f64("amplitude", 1e-3)?;
    let sample_dt = cfg.resolve_f64("sample_dt", 0.02)?;

    let roots = find_imaginary_poles(l, a)?;
    let s = *roots.first().ok_or_else(|| {
        CliError::Core(CoreError::NonConvergence {
            what: "imaginary pole search",
            detail: "no unstable rate found in (0, 1)".into(),
        })
    })?;
    let grid = RadialGrid::new(l, n)?;
    let problem = WaveProblem::linearized(grid.clone(), a);
    let initial = mode_state(&grid, s, amplitude)?;
    let opts = SimOptions { t_end, sample_dt, ..Default::default() };

    // a run that outgrows the divergence guard is still a successful
    // demonstration of the instability
    let csv = out.join("history.csv");
    let results = match simulate(&problem, &initial, &opts) {
        Ok(run) => {
            let fit = measure_decay_rate(&run.history, 0.1 * t_end, 0.9 * t_end)?;
            let growth = -fit.rate;
            write_history_csv(&csv, &run.history, &|_| 0.0)?;
            emit_history_plots(out, "history.csv", run.history.times.len(), &[])?;
            json!({
                "unstable_rates": roots,
                "growth_spectral": s,
                "growth_spectral_original": rate_to_original(s),
                "growth_measured": growth,
                "growth_measured_original": rate_to_original(growth),
                "mismatch_rel": (growth - s).abs() / s,
                "r_squared": fit.r_squared,
            })
        }
        Err(CoreError::Blowup { time, amplitude }) => {
            write_history_csv(&csv, &Default::default(), &|_| 0.0)?;
            emit_history_plots(out, "history.csv", 0, &[])?;
            json!({
                "unstable_rates": roots,
                "growth_spectral": s,
                "demonstration": "diverged past the guard",
                "blowup_time": time,
                "blowup_amplitude": amplitude,
            })
        }
        Err(e) => return Err(e.into()),
    };
    Ok((vec!["history.csv", "energy.gp", "control.gp"], results))
}

// ---------------------------------------------------------------------------
// open loop
// ---------------------------------------------------------------------------

fn run_open_loop(cfg: &mut Config, out: &Path) -> Result<(Vec<&'static str>, Value)> {
    let (l, a) = resolve_geometry(cfg)?;
    let n = cfg.resolve_usize("n", 2001)?;
    let line = asymptotic_line(l, a);
    let beta_target = cfg.resolve_f64("beta_target", 0.95 * line)?;
    let alpha_max = cfg.resolve_f64("alpha_max", 40.0)?;
    let t_end = cfg.resolve_f64("t_end", 30.0)?;
    let amplitude = cfg.resolve_f64("amplitude", 1e-3)?;
    let initial_kind = cfg.resolve_choice("initial", "mode", &["mode", "bump"])?;
    let control = cfg.resolve_choice("control", "on", &["on", "off"])?;
    let max_iterations = cfg.resolve_usize("max_iterations", 10)?;
    let tol = cfg.resolve_f64("tol", 1e-8)?;
    let sample_dt = cfg.resolve_f64("sample_dt", 0.02)?;
    check_beta("beta_target", beta_target, l, a)?;

    let grid = RadialGrid::new(l, n)?;
    let initial = initial_state(&initial_kind, &grid, l, a, amplitude)?;

    if control == "off" {
        // uncontrolled twin: the linearized instability demonstration
        let problem = WaveProblem::linearized(grid.clone(), a);
        let opts = SimOptions { t_end, sample_dt, ..Default::default() };
        let csv = out.join("history.csv");
        let results = match simulate(&problem, &initial, &opts) {
            Ok(run) => {
                let fit = measure_decay_rate(&run.history, 0.1 * t_end, 0.9 * t_end)?;
                write_history_csv(&csv, &run.history, &|_| 0.0)?;
                emit_history_plots(out, "history.csv", run.history.times.len(), &[])?;
                json!({
                    "control": "off",
                    "growth_measured": -fit.rate,
                    "growth_measured_original": rate_to_original(-fit.rate),
                    "r_squared": fit.r_squared,
                })
            }
            Err(CoreError::Blowup { time, amplitude }) => {
                write_history_csv(&csv, &Default::default(), &|_| 0.0)?;
                emit_history_plots(out, "history.csv", 0, &[])?;
                json!({
                    "control": "off",
                    "demonstration": "diverged past the guard",
                    "blowup_time": time,
                    "blowup_amplitude": amplitude,
                })
            }
            Err(e) => return Err(e.into()),
        };
        return Ok((vec!["history.csv", "energy.gp", "control.gp"], results));
    }

    let loop_cfg = OpenLoopConfig {
        beta_target,
        alpha_max,
        t_end,
        max_iterations,
        tol,
        sample_dt,
    };
    let outcome = open_loop_stabilize(&grid, a, &initial, &loop_cfg)?;
    let drive = |t: f64| outcome.control.eval(t);
    write_history_csv(&out.join("history.csv"), &outcome.nonlinear_history, &drive)?;
    write_history_csv(&out.join("linear_history.csv"), &outcome.linear_history, &drive)?;
    emit_history_plots(out, "history.csv", outcome.nonlinear_history.times.len(), &[])?;

    let results = json!({
        "control": "on",
        "beta_target": beta_target,
        "beta_target_original": rate_to_original(beta_target),
        "cancelled_poles": outcome
            .cancelled_poles
            .iter()
            .map(|w| json!({ "re": w.re, "im": w.im }))
            .collect::<Vec<_>>(),
        "iterations": outcome.iterations,
        "last_delta": outcome.last_delta,
        "coefficients": outcome.control.coeffs(),
        "c_beta": outcome.control.c_beta,
        "initial_h1": h1_norm(&initial),
        "linear_fit": fit_json(&outcome.decay_fit),
        "nonlinear_fit": fit_json(&outcome.nonlinear_fit),
        "smallness": { "lhs": outcome.smallness_lhs, "ok": outcome.smallness_ok },
    });
    Ok((
        vec!["history.csv", "linear_history.csv", "energy.gp", "control.gp"],
        results,
    ))
}

// ---------------------------------------------------------------------------
// closed loop
// ---------------------------------------------------------------------------

fn run_closed_loop(cfg: &mut Config, out: &Path) -> Result<(Vec<&'static str>, Value)> {
    let (l, a) = resolve_geometry(cfg)?;
    let n = cfg.resolve_usize("n", 2001)?;
    let line = asymptotic_line(l, a);
    let beta_target = cfg.resolve_f64("beta_target", 0.95 * line)?;
    let epsilon0 = cfg.resolve_f64("epsilon0", 0.15 * beta_target)?;
    let period = cfg.resolve_f64("period", 6.0)?;
    let periods = cfg.resolve_usize("periods", 6)?;
    if periods == 0 {
        return Err(CliError::Config("periods must be at least 1".into()));
    }
    let observer_iterations = cfg.resolve_usize("observer_iterations", 3)?;
    let kick_period = cfg.resolve_usize("kick_period", 3)?;
    let kick_factor = cfg.resolve_f64("kick_factor", 1.1)?;
    let amplitude = cfg.resolve_f64("amplitude", 0.02)?;
    let initial_kind = cfg.resolve_choice("initial", "bump", &["mode", "bump"])?;
    let alpha_max = cfg.resolve_f64("alpha_max", 40.0)?;
    let sample_dt = cfg.resolve_f64("sample_dt", 0.02)?;
    let auto_grow = cfg.resolve_bool("auto_grow", true)?;
    check_beta("beta_target", beta_target, l, a)?;

    let grid = RadialGrid::new(l, n)?;
    let initial = initial_state(&initial_kind, &grid, l, a, amplitude)?;
    let loop_cfg = ClosedLoopConfig {
        beta_target,
        alpha_max,
        epsilon0,
        period,
        periods,
        observer_iterations,
        kick_period: if kick_period == 0 { None } else { Some(kick_period) },
        kick_factor,
        sample_dt,
        auto_grow,
    };
    let outcome = closed_loop_run(&grid, a, &initial, &loop_cfg)?;

    // each period applies its window in period-local time; reconstruct the
    // global drive from the reported coefficients and the exact step count
    let dt = 0.9 * grid.dr();
    let steps = ((outcome.period / dt).ceil() as usize).max(1);
    let advance = steps as f64 * dt;
    let coeff_sets: Vec<Vec<f64>> =
        outcome.reports.iter().map(|r| r.coefficients.clone()).collect();
    let drive = move |t: f64| {
        let j = if t <= 0.0 { 0 } else { ((t / advance).floor() as usize).min(coeff_sets.len() - 1) };
        let local = t - j as f64 * advance;
        coeff_sets[j]
            .iter()
            .enumerate()
            .map(|(k, c)| c * basis(k + 1, local))
            .sum::<f64>()
    };
    write_history_csv(&out.join("history.csv"), &outcome.history, &drive)?;

    use std::fmt::Write as _;
    let mut periods_csv = String::from("index,norm_start,norm_end,contraction,kicked,c_beta\n");
    for r in &outcome.reports {
        let _ = writeln!(
            periods_csv,
            "{},{},{},{},{},{}",
            r.index,
            fmt_f64(r.norm_start),
            fmt_f64(r.norm_end),
            fmt_f64(r.contraction),
            u8::from(r.kicked),
            fmt_f64(r.control_c_beta),
        );
    }
    let periods_path = out.join("periods.csv");
    std::fs::write(&periods_path, periods_csv).map_err(io_err(&periods_path))?;

    let starts: Vec<f64> = (0..outcome.reports.len()).map(|j| j as f64 * advance).collect();
    emit_history_plots(out, "history.csv", outcome.history.times.len(), &starts)?;

    let worst = outcome
        .reports
        .iter()
        .skip(1)
        .map(|r| r.contraction)
        .fold(0.0f64, f64::max);
    let results = json!({
        "beta_target": beta_target,
        "epsilon0": epsilon0,
        "period": outcome.period,
        "certified_contraction": outcome.certified_contraction,
        "worst_contraction_after_first": worst,
        "periods": outcome
            .reports
            .iter()
            .map(|r| json!({
                "index": r.index,
                "norm_start": r.norm_start,
                "norm_end": r.norm_end,
                "contraction": r.contraction,
                "kicked": r.kicked,
                "c_beta": r.control_c_beta,
                "coefficients": r.coefficients,
            }))
            .collect::<Vec<_>>(),
    });
    Ok((
        vec!["history.csv", "periods.csv", "energy.gp", "control.gp"],
        results,
    ))
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn run_verify(cfg: &mut Config, out: &Path) -> Result<(Vec<&'static str>, Value)> {
    let (l, a) = resolve_geometry(cfg)?;
    let outcomes = kgstab_core::kernel_verify::run_all(l, a)?;
    let mut failed = 0usize;
    let mut checks = Vec::new();
    for o in &outcomes {
        println!(
            "{}  {}  statistic {:.6e} vs bound {:.6e}  ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.name,
            o.statistic,
            o.bound,
            o.detail,
        );
        if !o.pass {
            failed += 1;
        }
        checks.push(json!({
            "name": o.name,
            "statistic": o.statistic,
            "bound": o.bound,
            "pass": o.pass,
            "detail": o.detail,
        }));
    }
    let report = json!({ "l": l, "a": a, "all_pass": failed == 0, "checks": checks });
    let path = out.join("verify.json");
    let text = serde_json::to_string_pretty(&report).expect("report serialization");
    std::fs::write(&path, text).map_err(io_err(&path))?;
    if failed > 0 {
        return Err(CliError::Runtime {
            code: "kernel-verify/failed",
            message: format!("{failed} verification check(s) failed"),
        });
    }
    Ok((vec!["verify.json"], report))
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

fn parse_list(key: &str, raw: &str) -> Result<Vec<String>> {
    let items: Vec<String> =
        raw.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::Config(format!("{key} = `{raw}` contains no values")));
    }
    for item in &items {
        item.parse::<f64>()
            .map_err(|_| CliError::Config(format!("{key}: `{item}` is not a number")))?;
    }
    Ok(items)
}

fn run_sweep(cfg: &mut Config, out: &Path) -> Result<(Vec<&'static str>, Value)> {
    let scenario = cfg.resolve_choice(
        "scenario",
        "poles",
        &["poles", "instability", "open-loop", "closed-loop", "verify"],
    )?;
    let l_values = parse_list("l_values", &cfg.resolve_str("l_values", "1"))?;
    let a_values = parse_list("a_values", &cfg.resolve_str("a_values", "0.5"))?;

    let combos: Vec<(String, String)> = l_values
        .iter()
        .flat_map(|l| a_values.iter().map(move |a| (l.clone(), a.clone())))
        .collect();
    let threads = match std::env::var("KGSTAB_THREADS") {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&t| t >= 1)
            .ok_or_else(|| CliError::Config(format!("KGSTAB_THREADS = `{v}` must be a positive integer")))?,
        Err(_) => std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1),
    }
    .min(combos.len());

    let base = cfg.without(&["scenario", "l_values", "a_values"]);
    let queue = Mutex::new(combos.iter().cloned().enumerate().collect::<Vec<_>>());
    let rows = Mutex::new(vec![Value::Null; combos.len()]);

    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let Some((idx, (lv, av))) = queue.lock().unwrap().pop() else {
                    break;
                };
                let dir = out.join(format!("L{lv}-a{av}"));
                let mut sub = base.clone();
                sub.set("l", lv.as_str());
                sub.set("a", av.as_str());
                let row = match execute(&scenario, &mut sub, &dir) {
                    Ok(_) => json!({ "l": lv, "a": av, "dir": dir.file_name().unwrap().to_str(), "ok": true }),
                    Err(e) => json!({
                        "l": lv, "a": av, "dir": dir.file_name().unwrap().to_str(),
                        "ok": false, "error": format!("[{}] {e}", e.code()),
                        "exit_code": e.exit_code(),
                    }),
                };
                rows.lock().unwrap()[idx] = row;
            });
        }
    });

    let rows = rows.into_inner().unwrap();
    let failures: Vec<i64> = rows
        .iter()
        .filter(|r| r["ok"] == json!(false))
        .map(|r| r["exit_code"].as_i64().unwrap_or(3))
        .collect();
    let report = json!({
        "scenario": scenario,
        "threads": threads,
        "combos": rows,
        "all_ok": failures.is_empty(),
    });
    let path = out.join("sweep.json");
    let text = serde_json::to_string_pretty(&report).expect("sweep serialization");
    std::fs::write(&path, text).map_err(io_err(&path))?;
    if !failures.is_empty() {
        if failures.iter().any(|&c| c == 2) {
            return Err(CliError::Config(format!(
                "{} sweep combination(s) failed on configuration",
                failures.len()
            )));
        }
        return Err(CliError::Runtime {
            code: "cli/sweep-failed",
            message: format!("{} sweep combination(s) failed", failures.len()),
        });
    }
    Ok((vec!["sweep.json"], report))
}
