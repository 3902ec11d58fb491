//! `stagebot` command line. Exit codes: 0 ok, 1 invalid input or failed
//! validation, 2 runtime fault.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use stagebot_core::reward::RewardConfig;

use crate::bench::{actuator_bench, write_bench_csv, BenchProfile};
use crate::episode::{run_episode_with, RunOptions, Simulation, SLOW_TRACE_FILE};
use crate::error::{SimError, SimResult};
use crate::libs::{Libraries, CONFIG_ROOT_ENV};
use crate::scenario::{EpisodeScenario, Randomization};
use crate::score::{score_trace, write_score_csv};
use crate::server::{serve, ServeConfig};
use crate::trace::read_slow_csv;
use crate::validate::{validate_clips, validate_dir, validate_gait, ValidationReport};

#[derive(Debug, Parser)]
#[command(name = "stagebot", version, about = "Episode runner, actuator bench and live service")]
pub struct Cli {
    /// Directory with model, tables, clips and policies overriding the
    /// bundled ones.
    #[arg(long, global = true, env = CONFIG_ROOT_ENV)]
    pub config_root: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write traces, rewards and a summary.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
        /// Pace the simulation to the wall clock.
        #[arg(long)]
        realtime: bool,
    },
    /// Replay a setpoint profile on one actuator.
    Bench {
        profile: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Recompute rewards on a recorded 50 Hz trace.
    Score {
        /// Trace CSV, or a run output directory.
        trace: PathBuf,
        /// Reward weights; defaults to the config root's.
        #[arg(long)]
        rewards: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check a clip or gait directory, or the configured libraries.
    Validate { dir: Option<PathBuf> },
    /// Run live and accept client sessions.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7600")]
        bind: String,
        #[arg(long, default_value_t = 30.0)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stop after this many simulated seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Run as fast as possible instead of in real time.
        #[arg(long)]
        fast: bool,
    },
}

fn output(path: Option<&Path>) -> SimResult<Box<dyn Write>> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
            }
            let f = std::fs::File::create(p).map_err(|e| SimError::io(p, e))?;
            Ok(Box::new(std::io::BufWriter::new(f)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn print_report(r: &ValidationReport) {
    for p in &r.problems {
        eprintln!("error: {p}");
    }
    println!("{} clips, {} gait samples, {} problems", r.clips, r.gait_samples, r.problems.len());
}

pub fn execute(cli: Cli) -> SimResult<()> {
    let root = cli.config_root.as_deref();
    match cli.command {
        Command::Run {
            scenario,
            seed,
            duration,
            out,
            realtime,
        } => {
            let libs = Libraries::resolve(root)?;
            let mut s = EpisodeScenario::load(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(d) = duration {
                s.duration = d;
            }
            let result = run_episode_with(&libs, &s, RunOptions { realtime })?;
            result.write_dir(&out)?;
            let sm = &result.summary;
            println!(
                "{} decisions, mae {:.4} rad, mean reward {:.3}, {} disturbance events",
                sm.decisions, sm.mae, sm.reward_total_mean, sm.disturbance_events
            );
            if let Some((t, kind)) = sm.termination {
                println!("terminated at t={t:.2}s: {kind:?}");
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Bench { profile, seed, out } => {
            let libs = Libraries::resolve(root)?;
            let mut p = BenchProfile::load(&profile)?;
            if let Some(seed) = seed {
                p.seed = seed;
            }
            let rows = actuator_bench(&p, &libs.actuators)?;
            write_bench_csv(&rows, output(out.as_deref())?)
        }
        Command::Score { trace, rewards, out } => {
            let libs = Libraries::resolve(root)?;
            let path = if trace.is_dir() { trace.join(SLOW_TRACE_FILE) } else { trace };
            let file = std::fs::File::open(&path).map_err(|e| SimError::io(&path, e))?;
            let rows = read_slow_csv(std::io::BufReader::new(file))?;
            let config = match rewards {
                Some(p) => RewardConfig::load(&p)?,
                None => libs.rewards.clone(),
            };
            let report = score_trace(&libs.model, &config, &rows);
            write_score_csv(&report, &rows, output(out.as_deref())?)?;
            eprintln!(
                "{} rows, mean total {:.4}, max deviation from recorded {:.3e}, {} terminations",
                rows.len(),
                report.total_mean,
                report.max_deviation,
                report.terminations
            );
            Ok(())
        }
        Command::Validate { dir } => {
            let libs = Libraries::resolve(root)?;
            let report = match dir {
                Some(d) => validate_dir(&libs.model, &d),
                None => {
                    let mut r = validate_clips(&libs.model, &libs.clips);
                    let g = validate_gait(&libs.model, &libs.gait);
                    r.gait_samples = g.gait_samples;
                    r.problems.extend(g.problems);
                    r
                }
            };
            print_report(&report);
            if report.ok() {
                Ok(())
            } else {
                Err(SimError::Validation(report.problems.len()))
            }
        }
        Command::Serve {
            bind,
            rate,
            seed,
            duration,
            fast,
        } => {
            if !(rate > 0.0) {
                return Err(SimError::Scenario("telemetry rate must be positive".into()));
            }
            let libs = Libraries::resolve(root)?;
            let sim = Simulation::new(libs, seed, Randomization::default(), None)?;
            let handle = serve(
                sim,
                ServeConfig {
                    bind,
                    telemetry_rate: rate,
                    realtime: !fast,
                    max_duration: duration,
                    ..ServeConfig::default()
                },
            )?;
            eprintln!("listening on {}", handle.local_addr());
            let stats = handle.join()?;
            eprintln!("{} ticks, {} missed deadlines", stats.ticks, stats.deadline_misses);
            Ok(())
        }
    }
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
