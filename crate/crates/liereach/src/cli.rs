//! Command-line front end.
//!
//! Four subcommands, all emitting canonical JSON on stdout:
//!
//! * `analyze <spec>` — run a controllability check on a system file.
//! * `simulate <spec> --schedule <file>` — integrate a piecewise-constant
//!   schedule, optionally through the clock-carrying augmented system.
//! * `steer <spec> --target <file> --time T --segments K` — search for a
//!   schedule reaching a target state.
//! * `demo <example1|example2|example3|drift2d>` — analyze a bundled case.
//!
//! Exit codes: 0 on success, 1 when `--expect controllable` was requested
//! but the condition failed, 2 on any input or usage error, 3 when the
//! analysis was inconclusive (a cap or truncation prevented a definite
//! answer).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::augmented::augment;
use crate::cases;
use crate::error::Result;
use crate::propagate::{default_dt_max, propagate, propagate_augmented};
use crate::specfile::{
    canonical_json, load_schedule, load_spec, load_target, report_to_value, steering_to_value,
    trajectory_to_value, write_json,
};
use crate::steering::steer;
use crate::system::{run_check, AnalysisOptions, CheckKind, Verdict};

#[derive(Parser)]
#[command(
    name = "liereach",
    version,
    about = "Controllability analysis and steering for time-dependent bilinear systems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Sufficiency,
    SufficiencyTimeInvariant,
    ControlSpan,
}

impl From<CheckArg> for CheckKind {
    fn from(c: CheckArg) -> CheckKind {
        match c {
            CheckArg::Sufficiency => CheckKind::Sufficiency,
            CheckArg::SufficiencyTimeInvariant => CheckKind::SufficiencyTimeInvariant,
            CheckArg::ControlSpan => CheckKind::ControlSpan,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpectArg {
    Controllable,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a controllability check on a system description file.
    Analyze {
        /// Path to the system JSON file.
        spec: PathBuf,
        /// Which check to run.
        #[arg(long, value_enum, default_value = "sufficiency")]
        check: CheckArg,
        /// Derivative orders carried by matrix jets.
        #[arg(long = "jet-order")]
        jet_order: Option<usize>,
        /// Rank and membership tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Bracket sweep cap per closure.
        #[arg(long = "max-depth")]
        max_depth: Option<usize>,
        /// Basis size cap per closure.
        #[arg(long = "max-dim")]
        max_dim: Option<usize>,
        /// Drift-recursion generation cap.
        #[arg(long = "max-generations")]
        max_generations: Option<usize>,
        /// Fail (exit 1) unless the verdict is stronglyControllable.
        #[arg(long, value_enum)]
        expect: Option<ExpectArg>,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a piecewise-constant control schedule.
    Simulate {
        /// Path to the system JSON file.
        spec: PathBuf,
        /// Path to the schedule JSON file.
        #[arg(long)]
        schedule: PathBuf,
        /// Upper bound on the integrator step.
        #[arg(long = "dt-max")]
        dt_max: Option<f64>,
        /// Integrate the clock-carrying augmented system instead.
        #[arg(long)]
        augmented: bool,
        /// Also write the trajectory to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a schedule steering the initial state onto a target.
    Steer {
        /// Path to the system JSON file.
        spec: PathBuf,
        /// Path to the target state JSON file.
        #[arg(long)]
        target: PathBuf,
        /// Total schedule duration.
        #[arg(long)]
        time: f64,
        /// Number of equal-length schedule segments.
        #[arg(long)]
        segments: usize,
        /// Total trajectory-evaluation budget across restarts.
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Seed for every random choice the search makes.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Also write the result to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analyze a bundled case study.
    Demo {
        /// One of: example1, example2, example3, drift2d.
        token: String,
    },
}

fn verdict_code(verdict: Verdict, expect: Option<ExpectArg>) -> i32 {
    match verdict {
        Verdict::StronglyControllable => 0,
        Verdict::ConditionFailed => {
            if expect.is_some() {
                1
            } else {
                0
            }
        }
        Verdict::Inconclusive => 3,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Analyze {
            spec,
            check,
            jet_order,
            tol,
            max_depth,
            max_dim,
            max_generations,
            expect,
            out,
        } => {
            let sys = load_spec(&spec)?;
            let mut opts = AnalysisOptions::default();
            if let Some(v) = jet_order {
                opts.jet_order = v;
            }
            if let Some(v) = tol {
                opts.tol = v;
            }
            if let Some(v) = max_depth {
                opts.max_depth = v;
            }
            if let Some(v) = max_dim {
                opts.max_dim = v;
            }
            if let Some(v) = max_generations {
                opts.max_generations = v;
            }
            let report = run_check(&sys, &opts, check.into())?;
            let value = report_to_value(&report);
            print!("{}", canonical_json(&value));
            if let Some(path) = out {
                write_json(&path, &value)?;
            }
            Ok(verdict_code(report.verdict, expect))
        }
        Cmd::Simulate {
            spec,
            schedule,
            dt_max,
            augmented,
            out,
        } => {
            let sys = load_spec(&spec)?;
            let sched = load_schedule(&schedule)?;
            let dt = dt_max.unwrap_or_else(|| default_dt_max(&sys, sched.total_time()));
            let traj = if augmented {
                let aug = augment(&sys)?;
                propagate_augmented(&aug, &sched, dt)?
            } else {
                propagate(&sys, &sched, dt)?
            };
            let value = trajectory_to_value(&traj);
            print!("{}", canonical_json(&value));
            if let Some(path) = out {
                write_json(&path, &value)?;
            }
            Ok(0)
        }
        Cmd::Steer {
            spec,
            target,
            time,
            segments,
            budget,
            seed,
            out,
        } => {
            let sys = load_spec(&spec)?;
            let goal = load_target(&target, sys.dim)?;
            let result = steer(&sys, &goal, time, segments, budget, seed)?;
            let value = steering_to_value(&result);
            print!("{}", canonical_json(&value));
            if let Some(path) = out {
                write_json(&path, &value)?;
            }
            Ok(0)
        }
        Cmd::Demo { token } => {
            let Some(case) = cases::demo_case(&token) else {
                eprintln!(
                    "error: unknown demo token \"{token}\" \
                     (expected example1, example2, example3, or drift2d)"
                );
                return Ok(2);
            };
            let report = run_check(
                &case.system,
                &AnalysisOptions::default(),
                CheckKind::Sufficiency,
            )?;
            print!("{}", canonical_json(&report_to_value(&report)));
            Ok(verdict_code(report.verdict, None))
        }
    }
}

/// Parses `argv` and runs the requested subcommand, returning the process
/// exit code. Usage errors print to stderr and map to exit code 2; clap's
/// help and version output keep exit code 0.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}
