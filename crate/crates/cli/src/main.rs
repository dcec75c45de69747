// SPDX-License-Identifier: Apache-2.0

//! `lfd`: run the learning-from-demonstration pipeline stage by stage or end to end.
//!
//! Exit codes: 0 success, 1 error (the failing stage is named on stderr),
//! 2 the run completed but the goal state was not reached.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lfd_core::environment::EnvScenario;
use lfd_core::inference::Policy;
use lfd_core::learning::{LearningReport, QStore};
use lfd_core::pipeline::{self, sha256_hex, SegmentArtifact, Toolkit};
use lfd_core::trace::{load_trace, synthesize_trace, write_trace, ScenarioSpec};
use lfd_core::{ObjectDatabase, PipelineConfig};

#[derive(Parser)]
#[command(name = "lfd", version, about = "One-shot learning from demonstration")]
struct Cli {
    /// Pipeline configuration (TOML). Defaults to $LFD_CONFIG, then the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Object database (TOML). Defaults to the built-in database.
    #[arg(long, global = true)]
    db: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a demonstration trace and its ground truth.
    GenTrace {
        /// Built-in scenario name (peel, peel-demo, no-contact) or "random".
        #[arg(long, default_value = "peel-demo")]
        scenario: String,
        /// Generator seed; defaults to the config's generator seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the ground-truth keypoints and skills (JSON).
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Detect keypoints and cut a trace into segments.
    Segment {
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify segments into skills and write the policy.
    Infer {
        segments: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute a policy in a simulated scenario.
    Run {
        policy: PathBuf,
        #[arg(long = "env")]
        scenario: PathBuf,
        /// Contact force for force-trajectory steps; defaults to the best stored action.
        #[arg(long)]
        force: Option<f64>,
        /// Q-table directory to take the best known action from.
        #[arg(long)]
        qstore: Option<PathBuf>,
        /// Per-step summary (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-control-step force and pose log (CSV).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Learn the contact force of a policy's force-trajectory step by self-evaluation.
    Learn {
        policy: PathBuf,
        scenario: PathBuf,
        #[arg(long)]
        qstore: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render a learning report as a per-episode CSV.
    Report {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// segment → infer → run → learn, with every artifact written to --out.
    Pipeline {
        trace: PathBuf,
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Start learning from these Q tables instead of an empty store.
        #[arg(long)]
        qstore: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn toolkit(cli: &Cli) -> Result<Toolkit> {
    let config = PipelineConfig::resolve(cli.config.as_deref()).context("stage config")?;
    let mut kit = Toolkit::builtin(config);
    if let Some(p) = &cli.db {
        kit.db = ObjectDatabase::load(p).context("stage config")?;
    }
    Ok(kit)
}

fn goal(reached: bool) -> ExitCode {
    if reached {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let kit = toolkit(&cli)?;
    match &cli.command {
        Command::GenTrace { scenario, seed, out, truth } => {
            let seed = seed.unwrap_or(kit.config.seeds.generator);
            let spec = if scenario == "random" {
                ScenarioSpec::random(seed, &kit.db)
            } else {
                match ScenarioSpec::builtin(scenario) {
                    Some(s) => s,
                    None => bail!("stage gen-trace: unknown scenario {scenario:?}"),
                }
            };
            let (trace, gt) = synthesize_trace(&spec, seed, &kit.db).context("stage gen-trace")?;
            write(out, &write_trace(&trace))?;
            if let Some(t) = truth {
                write(t, &gt.to_json())?;
            }
            log::info!("{} frames written to {}", trace.len(), out.display());
        }
        Command::Segment { trace, out } => {
            let sha = sha256_hex(&std::fs::read(trace).with_context(|| format!("stage segment: {}", trace.display()))?);
            let t = load_trace(trace, &kit.db).context("stage segment")?;
            let art = pipeline::segment_stage(&t, sha, &kit)?;
            write(out, &art.to_json())?;
            println!("{} keypoints, {} segments", art.keypoints.len(), art.segments.len());
        }
        Command::Infer { segments, out } => {
            let art = SegmentArtifact::from_json(&read(segments)?).context("stage infer: segments file")?;
            let policy = pipeline::infer_stage(&art, &kit)?;
            write(out, &policy.to_text())?;
            for s in &policy.steps {
                println!("{} -> {}", s.class, s.goal_state);
            }
        }
        Command::Run { policy, scenario, force, qstore, out, csv } => {
            let policy = Policy::parse(&read(policy)?).context("stage run: policy file")?;
            let scenario = EnvScenario::load(scenario).context("stage run")?;
            let store = match qstore {
                Some(d) => QStore::load(d).context("stage run")?,
                None => QStore::default(),
            };
            let bindings = pipeline::default_bindings(&policy, &scenario, &store, *force, &kit).context("stage run")?;
            let (summary, outcomes) = pipeline::run_stage(&policy, &scenario, &bindings, &kit)?;
            if let Some(p) = out {
                write(p, &summary.to_json())?;
            }
            if let Some(p) = csv {
                write(p, &pipeline::outcomes_csv(&outcomes))?;
            }
            for s in &summary.steps {
                println!("{} {} {} steps={} force={:.3}", s.class, if s.success { "ok" } else { "FAIL" }, s.final_state, s.steps_used, s.final_force);
            }
            return Ok(goal(summary.success));
        }
        Command::Learn { policy, scenario, qstore, report, csv } => {
            let policy = Policy::parse(&read(policy)?).context("stage learn: policy file")?;
            let scenario = EnvScenario::load(scenario).context("stage learn")?;
            let store = QStore::load(qstore).context("stage learn")?;
            let (rep, store) = pipeline::learn_stage(&policy, &scenario, store, &kit)?;
            store.save(qstore).context("stage learn")?;
            if let Some(p) = report {
                write(p, &rep.to_json())?;
            }
            if let Some(p) = csv {
                write(p, &rep.to_csv())?;
            }
            print!("{}", rep.to_csv());
            println!("{}", rep.stop_reason);
            return Ok(goal(rep.success));
        }
        Command::Report { report, out } => {
            let rep = LearningReport::from_json(&read(report)?).context("stage report")?;
            match out {
                Some(p) => write(p, &rep.to_csv())?,
                None => print!("{}", rep.to_csv()),
            }
        }
        Command::Pipeline { trace, scenario, out, qstore } => {
            let m = pipeline::cmd_pipeline(trace, scenario, &kit, out, qstore.as_deref())?;
            println!("policy: {:?}", m.policy);
            println!("learning episodes: {}", m.learning_episodes);
            println!("goal achieved: {}", m.final_goal_achieved);
            return Ok(goal(m.final_goal_achieved));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
