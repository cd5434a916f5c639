//! `kgstab`: scenario runner for the spectral stabilization toolkit.
//!
//! Every subcommand reads an optional flat `key = value` config file (or a
//! previous run's summary JSON), applies command-line overrides on top
//! (flags win), runs, and writes its artifacts plus a summary JSON holding
//! the complete resolved configuration. Exit codes: 0 success, 2 config
//! error, 3 numerical failure.

mod artifacts;
mod config;
mod scenarios;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{fmt_f64, CliError, Config};

#[derive(Parser)]
#[command(
    name = "kgstab",
    version,
    about = "Resolvent poles, boundary instability, and stabilizing controls of a radial wave equation"
)]
struct Cli {
    /// Flat key = value config file, or a previous run's summary JSON
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON/gnuplot artifacts
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Extra KEY=VALUE overrides, applied after the config file
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Geometry {
    /// Radius of the normalized domain
    #[arg(long)]
    l: Option<f64>,
    /// Boundary dissipation parameter, 0 < a < 1
    #[arg(long)]
    a: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Locate resolvent poles in a strip and export them as CSV
    Poles {
        #[command(flatten)]
        geometry: Geometry,
        /// Upper edge of the search strip (must stay below the asymptotic line)
        #[arg(long)]
        beta_max: Option<f64>,
        /// Horizontal extent of the search
        #[arg(long)]
        alpha_max: Option<f64>,
    },
    /// Demonstrate the boundary instability and match its growth rate
    Instability {
        #[command(flatten)]
        geometry: Geometry,
        /// Grid points
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Initial unstable-mode amplitude
        #[arg(long)]
        amplitude: Option<f64>,
    },
    /// Synthesize an open-loop control and verify linear and nonlinear decay
    OpenLoop {
        #[command(flatten)]
        geometry: Geometry,
        #[arg(long)]
        n: Option<usize>,
        /// Targeted decay rate (default 0.95 of the asymptotic line)
        #[arg(long)]
        beta_target: Option<f64>,
        #[arg(long)]
        alpha_max: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        amplitude: Option<f64>,
        /// Initial data: mode | bump
        #[arg(long)]
        initial: Option<String>,
        /// on applies the synthesized control, off runs the growing twin
        #[arg(long)]
        control: Option<String>,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        sample_dt: Option<f64>,
    },
    /// Run the periodically refreshed feedback loop
    ClosedLoop {
        #[command(flatten)]
        geometry: Geometry,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        beta_target: Option<f64>,
        /// Rate giveback of the per-period certification
        #[arg(long)]
        epsilon0: Option<f64>,
        #[arg(long)]
        period: Option<f64>,
        #[arg(long)]
        periods: Option<usize>,
        #[arg(long)]
        observer_iterations: Option<usize>,
        /// 1-based period that receives the disturbance kick; 0 disables
        #[arg(long)]
        kick_period: Option<usize>,
        #[arg(long)]
        kick_factor: Option<f64>,
        #[arg(long)]
        amplitude: Option<f64>,
        /// Initial data: bump | mode
        #[arg(long)]
        initial: Option<String>,
        #[arg(long)]
        alpha_max: Option<f64>,
        #[arg(long)]
        sample_dt: Option<f64>,
        /// Grow the period from measured data when certification fails
        #[arg(long)]
        auto_grow: Option<bool>,
    },
    /// Run the independent verification suite and export its report
    Verify {
        #[command(flatten)]
        geometry: Geometry,
    },
    /// Fan one scenario out over an L × a grid (KGSTAB_THREADS caps workers)
    Sweep {
        /// Scenario to repeat: poles | instability | open-loop | closed-loop | verify
        #[arg(long)]
        scenario: Option<String>,
        /// Comma-separated L values
        #[arg(long)]
        l_values: Option<String>,
        /// Comma-separated a values
        #[arg(long)]
        a_values: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Poles { .. } => "poles",
            Command::Instability { .. } => "instability",
            Command::OpenLoop { .. } => "open-loop",
            Command::ClosedLoop { .. } => "closed-loop",
            Command::Verify { .. } => "verify",
            Command::Sweep { .. } => "sweep",
        }
    }

    /// Copies the present flags into the config; flags win over the file.
    fn apply(&self, cfg: &mut Config) {
        fn set_f64(cfg: &mut Config, key: &str, v: &Option<f64>) {
            if let Some(v) = v {
                cfg.set(key, fmt_f64(*v));
            }
        }
        fn set_usize(cfg: &mut Config, key: &str, v: &Option<usize>) {
            if let Some(v) = v {
                cfg.set(key, v.to_string());
            }
        }
        fn set_str(cfg: &mut Config, key: &str, v: &Option<String>) {
            if let Some(v) = v {
                cfg.set(key, v.clone());
            }
        }
        fn set_geometry(cfg: &mut Config, g: &Geometry) {
            set_f64(cfg, "l", &g.l);
            set_f64(cfg, "a", &g.a);
        }
        match self {
            Command::Poles { geometry, beta_max, alpha_max } => {
                set_geometry(cfg, geometry);
                set_f64(cfg, "beta_max", beta_max);
                set_f64(cfg, "alpha_max", alpha_max);
            }
            Command::Instability { geometry, n, t_end, amplitude } => {
                set_geometry(cfg, geometry);
                set_usize(cfg, "n", n);
                set_f64(cfg, "t_end", t_end);
                set_f64(cfg, "amplitude", amplitude);
            }
            Command::OpenLoop {
                geometry,
                n,
                beta_target,
                alpha_max,
                t_end,
                amplitude,
                initial,
                control,
                max_iterations,
                tol,
                sample_dt,
            } => {
                set_geometry(cfg, geometry);
                set_usize(cfg, "n", n);
                set_f64(cfg, "beta_target", beta_target);
                set_f64(cfg, "alpha_max", alpha_max);
                set_f64(cfg, "t_end", t_end);
                set_f64(cfg, "amplitude", amplitude);
                set_str(cfg, "initial", initial);
                set_str(cfg, "control", control);
                set_usize(cfg, "max_iterations", max_iterations);
                set_f64(cfg, "tol", tol);
                set_f64(cfg, "sample_dt", sample_dt);
            }
            Command::ClosedLoop {
                geometry,
                n,
                beta_target,
                epsilon0,
                period,
                periods,
                observer_iterations,
                kick_period,
                kick_factor,
                amplitude,
                initial,
                alpha_max,
                sample_dt,
                auto_grow,
            } => {
                set_geometry(cfg, geometry);
                set_usize(cfg, "n", n);
                set_f64(cfg, "beta_target", beta_target);
                set_f64(cfg, "epsilon0", epsilon0);
                set_f64(cfg, "period", period);
                set_usize(cfg, "periods", periods);
                set_usize(cfg, "observer_iterations", observer_iterations);
                set_usize(cfg, "kick_period", kick_period);
                set_f64(cfg, "kick_factor", kick_factor);
                set_f64(cfg, "amplitude", amplitude);
                set_str(cfg, "initial", initial);
                set_f64(cfg, "alpha_max", alpha_max);
                set_f64(cfg, "sample_dt", sample_dt);
                if let Some(v) = auto_grow {
                    cfg.set("auto_grow", v.to_string());
                }
            }
            Command::Verify { geometry } => set_geometry(cfg, geometry),
            Command::Sweep { scenario, l_values, a_values } => {
                set_str(cfg, "scenario", scenario);
                set_str(cfg, "l_values", l_values);
                set_str(cfg, "a_values", a_values);
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::new(),
    };
    for pair in &cli.set {
        cfg.set_pair(pair)?;
    }
    cli.command.apply(&mut cfg);
    scenarios::execute(cli.command.name(), &mut cfg, &cli.out)?;
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            std::process::exit(e.exit_code());
        }
    }
}
