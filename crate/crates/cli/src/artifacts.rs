//! Artifact writers: lossless CSV, summary JSON, gnuplot scripts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use kgstab_core::spectral::{Pole, PoleKind};
use kgstab_core::timedomain::History;

use crate::config::{fmt_f64, io_err, Config, Result};

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(io_err(path))
}

/// History export with the drive evaluated at the sample times. Floats carry
/// 17 significant digits so a parse returns the exact bits.
pub fn write_history_csv(
    path: &Path,
    history: &History,
    drive: &dyn Fn(f64) -> f64,
) -> Result<()> {
    let mut out = String::from("t,h1_norm,e0,trace_u,b\n");
    for (i, &t) in history.times.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(t),
            fmt_f64(history.h1[i]),
            fmt_f64(history.e0[i]),
            fmt_f64(history.trace_u[i]),
            fmt_f64(drive(t)),
        );
    }
    write_file(path, &out)
}

pub fn write_poles_csv(path: &Path, poles: &[Pole]) -> Result<()> {
    let mut out = String::from("re,im,residual,kind\n");
    for p in poles {
        let kind = match p.kind {
            PoleKind::PurelyImaginary => "imaginary",
            PoleKind::ComplexPairMember => "complex-pair",
        };
        let _ = writeln!(
            out,
            "{},{},{},{kind}",
            fmt_f64(p.omega.re),
            fmt_f64(p.omega.im),
            fmt_f64(p.char_residual),
        );
    }
    write_file(path, &out)
}

/// The re-feedable run record: scenario name, fully resolved configuration,
/// artifact list, and scenario-specific results.
pub fn write_summary(
    out_dir: &Path,
    scenario: &str,
    cfg: &Config,
    artifacts: &[&str],
    results: serde_json::Value,
) -> Result<PathBuf> {
    let mut obj = serde_json::Map::new();
    obj.insert("scenario".into(), serde_json::Value::String(scenario.into()));
    obj.insert("config".into(), cfg.to_json());
    obj.insert(
        "artifacts".into(),
        serde_json::Value::Array(
            artifacts.iter().map(|a| serde_json::Value::String((*a).into())).collect(),
        ),
    );
    obj.insert("results".into(), results);
    let path = out_dir.join("summary.json");
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(obj))
        .expect("summary serialization cannot fail");
    write_file(&path, &text)?;
    Ok(path)
}

/// Emits `energy.gp` (log-scale norm and energy vs t) and `control.gp`
/// (drive vs t) next to the history CSV. Period boundaries, when given,
/// become vertical markers. A zero-length history produces scripts that
/// only print a warning.
pub fn emit_history_plots(
    out_dir: &Path,
    csv_name: &str,
    rows: usize,
    period_starts: &[f64],
) -> Result<()> {
    if rows == 0 {
        let warn = "# no history rows were recorded; nothing to plot\nprint 'warning: empty history, no plot emitted'\n";
        write_file(&out_dir.join("energy.gp"), warn)?;
        write_file(&out_dir.join("control.gp"), warn)?;
        return Ok(());
    }
    let mut markers = String::new();
    for (i, t) in period_starts.iter().enumerate() {
        let _ = writeln!(
            markers,
            "set arrow {} from {t:.6}, graph 0 to {t:.6}, graph 1 nohead dashtype 2 lc rgb '#999999'",
            i + 1
        );
    }
    let energy = format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale y\n\
         set xlabel 't'\n\
         set ylabel 'norm'\n\
         set format y '%.1e'\n\
         {markers}\
         plot '{csv_name}' using 1:2 with lines title 'h1 norm', \\\n\
              '{csv_name}' using 1:(abs($3)) with lines title '|e0|'\n"
    );
    write_file(&out_dir.join("energy.gp"), &energy)?;
    let control = format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 't'\n\
         set ylabel 'b(t)'\n\
         {markers}\
         plot '{csv_name}' using 1:5 with lines title 'boundary drive'\n"
    );
    write_file(&out_dir.join("control.gp"), &control)
}
