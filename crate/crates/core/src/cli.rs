//! Command-line front end. Machine outputs go to files under `--out`;
//! progress and diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::calibration::{save_report, save_samples};
use crate::config::{Config, ConfigError};
use crate::error::Error;
use crate::harness;

pub const LOG_ENV: &str = "SOFTGRIP_LOG";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "softgrip", version, about = "Soft-hand contact-force estimation and control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate every finger and write samples and reports.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Run one experiment and write its traces and metrics.
    Run {
        experiment: Experiment,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Check a configuration and print the effective values.
    Validate {
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
    },
    /// Reproduce the outputs recorded by a manifest.
    Rerun {
        #[arg(long, value_name = "PATH")]
        manifest: PathBuf,
        #[arg(long, value_name = "N", default_value_t = 0)]
        jobs: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Calibrate,
    Step,
    Switch,
    Grasp,
    Hardness,
    Estimate,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Calibrate => "calibrate",
            Experiment::Step => "step",
            Experiment::Switch => "switch",
            Experiment::Grasp => "grasp",
            Experiment::Hardness => "hardness",
            Experiment::Estimate => "estimate",
        }
    }
}

/// Written next to every output set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub experiment: Experiment,
    pub version: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, ConfigError> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_outputs(cfg: &Config, experiment: Experiment, seed: u64, out: &Path) -> Result<(), Error> {
    match experiment {
        Experiment::Calibrate => {
            for run in harness::calibrate_hand(cfg, seed)? {
                let i = run.finger + 1;
                save_samples(out.join(format!("finger{i}_samples.csv")), &run.samples)?;
                save_report(out.join(format!("finger{i}_report.json")), &run.report)?;
                eprintln!(
                    "finger {i}: degree {} selected from {} samples",
                    run.report.selected_degree,
                    run.samples.len()
                );
            }
        }
        Experiment::Estimate => {
            let run = harness::run_estimation_accuracy(cfg, seed)?;
            for (i, trace) in run.traces.iter().enumerate() {
                trace.save(out.join(format!("estimate_pos{}.csv", i + 1)))?;
            }
            write_json(&out.join("estimation.json"), &run.table)?;
            eprintln!("max estimation error {:.4} N", run.table.max_abs_error);
        }
        Experiment::Step => {
            let res = harness::run_step_response(cfg, seed)?;
            for run in &res.runs {
                if let Some(t) = &run.trace {
                    t.save(out.join(format!("step_run{}.csv", run.run + 1)))?;
                }
            }
            write_json(&out.join("metrics.json"), &res)?;
            eprintln!(
                "worst post-settle RMS {:.4} N",
                res.worst.rms_error_post_settle
            );
        }
        Experiment::Switch => {
            let res = harness::run_switching_experiment(cfg, seed)?;
            for run in &res.runs {
                if let Some(t) = &run.trace {
                    t.save(out.join(format!("switch_run{}.csv", run.run + 1)))?;
                }
            }
            write_json(&out.join("metrics.json"), &res)?;
            eprintln!("worst overshoot {:.2} %", 100.0 * res.worst.overshoot);
        }
        Experiment::Grasp => {
            let table = harness::run_grasp_sweep(cfg, seed)?;
            write_json(&out.join("sweep.json"), &table)?;
            for obj in &table.objects {
                eprintln!("{}:", obj.object);
                for row in &obj.rows {
                    eprintln!(
                        "  {:>4} N  dropped {:>5.1} %  deformed {:>5.1} %",
                        row.target_force, row.dropped_pct, row.deformed_pct
                    );
                }
            }
        }
        Experiment::Hardness => {
            let report = harness::run_hardness_probe(cfg, seed)?;
            for probe in &report.probes {
                let name = probe.summary.object.as_deref().unwrap_or("free");
                probe.trace.save(out.join(format!("hardness_{name}.csv")))?;
                eprintln!("{name}: {:?}", probe.summary.classification);
            }
            #[derive(Serialize)]
            struct Out {
                seed: u64,
                probes: Vec<harness::ProbeSummary>,
            }
            write_json(
                &out.join("hardness.json"),
                &Out {
                    seed: report.seed,
                    probes: report.summaries(),
                },
            )?;
        }
    }
    Ok(())
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Runtime(format!("cannot start worker threads: {e}")))
}

fn execute(manifest: &RunManifest, jobs: usize) -> Result<(), Failure> {
    let mut cfg = load_config(manifest.config.as_deref())?;
    cfg.seed = manifest.seed;
    let out = &manifest.out_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    log::info!(
        "{} seed={} out={}",
        manifest.experiment.name(),
        manifest.seed,
        out.display()
    );
    thread_pool(jobs)?.install(|| write_outputs(&cfg, manifest.experiment, cfg.seed, out))?;
    write_json(&out.join(MANIFEST_FILE), manifest)?;
    Ok(())
}

fn manifest_for(common: &Common, experiment: Experiment, out: PathBuf) -> Result<RunManifest, Failure> {
    let cfg = load_config(common.config.as_deref())?;
    let config = match &common.config {
        Some(p) => Some(fs::canonicalize(p).map_err(|source| {
            Failure::from(ConfigError::Read {
                path: p.clone(),
                source,
            })
        })?),
        None => None,
    };
    Ok(RunManifest {
        config,
        seed: common.seed.unwrap_or(cfg.seed),
        out_dir: out,
        experiment,
        version: env!("CARGO_PKG_VERSION").to_owned(),
    })
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Calibrate { common, out } => {
            let m = manifest_for(&common, Experiment::Calibrate, out)?;
            execute(&m, common.jobs)
        }
        Command::Run {
            experiment,
            common,
            out,
        } => {
            let m = manifest_for(&common, experiment, out)?;
            execute(&m, common.jobs)
        }
        Command::Validate { config } => {
            let cfg = load_config(config.as_deref())?;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(cfg.to_toml().as_bytes())
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            Ok(())
        }
        Command::Rerun { manifest, jobs } => {
            let text = fs::read_to_string(&manifest).map_err(|e| {
                Failure::Usage(format!("cannot read manifest {}: {e}", manifest.display()))
            })?;
            let m: RunManifest = serde_json::from_str(&text).map_err(|e| {
                Failure::Usage(format!("invalid manifest {}: {e}", manifest.display()))
            })?;
            if m.version != env!("CARGO_PKG_VERSION") {
                log::warn!(
                    "manifest written by version {}, running {}",
                    m.version,
                    env!("CARGO_PKG_VERSION")
                );
            }
            execute(&m, jobs)
        }
    }
}

/// Parse `args` and run. Returns 0 on success, 1 on runtime failure and 2 on
/// usage or configuration errors.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn"))
        .format_target(false)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
