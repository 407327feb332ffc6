//! Command-line front end.
//!
//! Exit codes: 0 fully determined, 1 error, 2 some headline verdict is
//! Unknown, 3 a cross-check against simulation or a closed form disagrees.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::cev_grid::{default_grid, evaluate_grid, CevGridRow};
use crate::modelfile::load_model_file;
use crate::report::{analyze, render_simulation, render_text, ClassificationReport};
use crate::scale::ScaleOptions;
use crate::sim::{simulate_with_sensitivity, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_DISAGREE: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "noarb",
    version,
    about = "Boundary, density and no-arbitrage classification of diffusion models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a model file.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Anchor of the scale function (defaults to x0).
        #[arg(long)]
        anchor: Option<f64>,
        /// Relative tolerance of the numeric tail test.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Skip the symbolic asymptotics and decide everything numerically.
        #[arg(long)]
        numeric_only: bool,
    },
    /// Simulate a model file and cross-check the classification.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        paths: usize,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        seed: u64,
        /// Defaults to the file's horizon, then 1.
        #[arg(long)]
        horizon: Option<f64>,
        /// Absorption distance from a finite endpoint.
        #[arg(long)]
        eps: Option<f64>,
        /// Standard errors allowed before a cross-check flag fires.
        #[arg(long, default_value_t = 3.0)]
        z_level: f64,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Reproduce the CEV classification grid against its closed form.
    CevGrid {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

/// Parses `args` (including the program name) and runs the command,
/// writing the report to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string_pretty(v).map_err(|e| e.to_string())
}

fn analyze_file(file: &Path, opts: &ScaleOptions) -> Result<ClassificationReport, String> {
    let loaded = load_model_file(file).map_err(|e| e.to_string())?;
    analyze(&loaded, opts).map_err(|e| format!("{}: {e}", file.display()))
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32, String> {
    let io = |e: std::io::Error| e.to_string();
    match cmd {
        Command::Analyze {
            file,
            format,
            anchor,
            tolerance,
            numeric_only,
        } => {
            let mut opts = ScaleOptions {
                anchor,
                symbolic: !numeric_only,
                ..Default::default()
            };
            if let Some(t) = tolerance {
                if !(t > 0.0 && t < 1.0) {
                    return Err(format!("--tolerance must lie in (0, 1), got {t}"));
                }
                opts.settings.cauchy_tol = t;
            }
            let report = analyze_file(&file, &opts)?;
            match format {
                Format::Text => write!(out, "{}", render_text(&report)).map_err(io)?,
                Format::Json => writeln!(out, "{}", json(&report)?).map_err(io)?,
            }
            Ok(if report.has_unknown() { EXIT_UNKNOWN } else { EXIT_OK })
        }
        Command::Simulate {
            file,
            paths,
            dt,
            seed,
            horizon,
            eps,
            z_level,
            threads,
            format,
        } => {
            let loaded = load_model_file(&file).map_err(|e| e.to_string())?;
            let mut report = analyze(&loaded, &ScaleOptions::default()).map_err(|e| e.to_string())?;
            let config = SimConfig {
                boundary_eps: eps,
                ..SimConfig::new(paths, dt, horizon.or(loaded.file.horizon).unwrap_or(1.0), seed)
            };
            let run = || simulate_with_sensitivity(&loaded.model, &loaded.tilt, &config);
            let sim = match threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| e.to_string())?
                    .install(run),
                None => run(),
            }
            .map_err(|e| e.to_string())?;
            report.attach_simulation(sim, z_level);
            let section = report.simulation.as_ref().expect("attached above");
            match format {
                Format::Text => write!(out, "{}", render_simulation(section)).map_err(io)?,
                Format::Json => writeln!(out, "{}", json(section)?).map_err(io)?,
            }
            Ok(if !report.flags().is_empty() {
                EXIT_DISAGREE
            } else if report.has_unknown() {
                EXIT_UNKNOWN
            } else {
                EXIT_OK
            })
        }
        Command::CevGrid { format } => {
            let rows = evaluate_grid(&default_grid(), &ScaleOptions::default()).map_err(|e| e.to_string())?;
            match format {
                Format::Text => write!(out, "{}", render_cev_grid(&rows)).map_err(io)?,
                Format::Json => writeln!(out, "{}", json(&rows)?).map_err(io)?,
            }
            let unknown = rows.iter().any(|r| {
                [
                    &r.engine.strictly_positive_finite_t,
                    &r.engine.positive_at_infinity,
                    &r.engine.vanishes_at_infinity,
                ]
                .iter()
                .any(|v| v.is_unknown())
            });
            Ok(if rows.iter().all(|r| r.matches) {
                EXIT_OK
            } else if unknown {
                EXIT_UNKNOWN
            } else {
                EXIT_DISAGREE
            })
        }
    }
}

fn yn(b: bool) -> &'static str {
    if b {
        "Holds"
    } else {
        "Fails"
    }
}

pub fn render_cev_grid(rows: &[CevGridRow]) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "{:>5} {:>5} {:>5} {:>5}  {:<7}  {:<15} {:<15} {:<15} {}\n",
        "alpha", "beta", "mu0", "sig0", "case", "Z_T>0", "Z_inf>0", "Z_inf=0", "match"
    ));
    for r in rows {
        let p = &r.params;
        let cell = |v: &crate::verdict::Verdict, want: bool| format!("{}/{}", v.value, yn(want));
        s.push_str(&format!(
            "{:>5} {:>5} {:>5} {:>5}  {:<7}  {:<15} {:<15} {:<15} {}\n",
            p.alpha,
            p.beta,
            p.mu0,
            p.sigma0,
            r.case.to_string(),
            cell(&r.engine.strictly_positive_finite_t, r.expected.positive_t),
            cell(&r.engine.positive_at_infinity, r.expected.positive_at_infinity),
            cell(&r.engine.vanishes_at_infinity, r.expected.vanishes_at_infinity),
            if r.matches { "yes" } else { "NO" }
        ));
    }
    let n = rows.iter().filter(|r| r.matches).count();
    s.push_str(&format!("{n} of {} cells match (engine/closed form)\n", rows.len()));
    s
}
