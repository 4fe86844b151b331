use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use taskrel_core::experiment::{self, ExperimentConfig, InferTabularConfig, OrbitDemoConfig, TheoremSweepConfig};
use taskrel_core::format;

#[derive(Parser)]
#[command(name = "taskrel", version, about = "Value-aware model learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random open-loop-unstable controllable system and write it out.
    GenSystem {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// OLS versus task-relevant SGD over a seed sweep, written as CSV.
    Compare {
        /// `key = value` config file; keys are the ExperimentConfig fields plus `preset`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in config used when no file is given.
        #[arg(long, default_value = "full", value_parser = ["full", "desk"])]
        preset: String,
        /// Overrides `output_path` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the suboptimality bound and its intermediate inequalities on random tabular MDPs.
    VerifyTheorem {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 5)]
        max_states: usize,
        #[arg(long, default_value_t = 3)]
        max_actions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0, hide = true)]
        planning_scale: f64,
    },
    /// Sample orthogonal transforms of the true model and report both losses.
    OrbitDemo {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Likelihood versus task-relevant latent inference over a batch-size sweep.
    InferTabular {
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        #[arg(long, default_value_t = 10)]
        min_batch: usize,
        #[arg(long, default_value_t = 10_000)]
        max_batch: usize,
        #[arg(long, default_value_t = 20)]
        sizes: usize,
        #[arg(long, default_value_t = 50)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::GenSystem { n, m, seed, out } => {
            let sys = experiment::true_system(n, m, seed)?;
            emit(out.as_deref(), format::write_system(&sys).as_bytes())?;
            Ok(true)
        }
        Command::Compare { config, preset, out } => {
            let cfg = match &config {
                Some(p) => ExperimentConfig::from_text(&read(p)?).with_context(|| format!("in {}", p.display()))?,
                None if preset == "desk" => ExperimentConfig::desk(),
                None => ExperimentConfig::full(),
            };
            let system = match &cfg.system_path {
                Some(p) => Some(format::read_system(&read(Path::new(p))?).with_context(|| format!("in {p}"))?),
                None => None,
            };
            let runs = experiment::compare(&cfg, system.as_ref())?;
            let mut buf = Vec::new();
            experiment::write_compare_csv(&mut buf, &cfg, &runs)?;
            let target = out.or_else(|| cfg.output_path.as_ref().map(PathBuf::from));
            emit(target.as_deref(), &buf)?;
            Ok(true)
        }
        Command::VerifyTheorem { trials, max_states, max_actions, seed, out, planning_scale } => {
            let cfg = TheoremSweepConfig { trials, max_states, max_actions, seed, planning_scale, ..Default::default() };
            let rep = experiment::theorem_sweep(&cfg)?;
            emit(out.as_deref(), rep.render().as_bytes())?;
            Ok(rep.violations() == 0)
        }
        Command::OrbitDemo { n, m, samples, seed, out } => {
            let cfg = OrbitDemoConfig { n, m, samples, seed, ..Default::default() };
            let rep = experiment::orbit_demo(&cfg)?;
            emit(out.as_deref(), rep.render().as_bytes())?;
            Ok(true)
        }
        Command::InferTabular { gamma, min_batch, max_batch, sizes, resamples, seed, out } => {
            let cfg = InferTabularConfig::with_grid(gamma, min_batch, max_batch, sizes, resamples, seed)?;
            let rep = experiment::infer_tabular(&cfg)?;
            emit(out.as_deref(), experiment::render_separation(&cfg, &rep).as_bytes())?;
            Ok(rep.separated() && rep.tr_picks_within_bound)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
