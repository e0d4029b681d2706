use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evotrend_core::lockstep::LockstepSchedule;
use evotrend_core::pairset::{run_pairset, Status};
use evotrend_core::report::{analyze_set, AnalysisOptions};
use evotrend_core::run::{files, run, ArtifactDir};
use evotrend_core::{Error, Mode, NeuronFilter, RunConfig};

/// Overrides the artifact directory when `--out` is not given.
const OUT_ENV: &str = "EVOTREND_OUT";

#[derive(Parser)]
#[command(name = "evotrend", version, about = "Driven vs. passive complexity trends in an evolving agent ecology")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One run: driven, lockstep (needs --schedule) or complexity-fitness.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<Mode>,
        /// Driven run's events.csv to replay in lockstep mode.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Paired driven and lockstep runs; resumes an interrupted set.
    Pairset {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pairs: usize,
    },
    /// Complexity, t-series, consistency and histograms for a pair set.
    Analyze {
        /// Pair-set root (holds manifest.txt).
        #[arg(long, env = OUT_ENV)]
        out: Option<PathBuf>,
        #[arg(long)]
        neurons: Option<NeuronFilter>,
        #[arg(long)]
        bin_width: Option<u64>,
    },
    /// A run in which the least complex agent is periodically replaced.
    Fitness {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Run seed; the base seed for a pair set.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = OUT_ENV)]
    out: Option<PathBuf>,
    #[arg(long)]
    neurons: Option<NeuronFilter>,
    #[arg(long)]
    bin_width: Option<u64>,
}

impl Common {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(&self.set.join("\n"))?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(n) = self.neurons {
            cfg.complexity.filter = n;
        }
        if let Some(w) = self.bin_width {
            cfg.analysis.bin_width = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
    Inconsistent(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            Error::Inconsistency { .. } | Error::Mismatch(_) => Failure::Inconsistent(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn single_run(cfg: &RunConfig, schedule: Option<&Path>) -> Result<(), Failure> {
    let schedule = match (cfg.mode, schedule) {
        (Mode::Lockstep, None) => {
            return Err(Failure::Usage(
                "lockstep requires a driven event log (pass --schedule <driven run>/events.csv)".into(),
            ))
        }
        (Mode::Lockstep, Some(p)) => Some(LockstepSchedule::load(p, cfg.steps)?),
        _ => None,
    };
    let mut dir = ArtifactDir::new(&cfg.out);
    let summary = run(cfg, schedule.as_ref(), &mut dir)?;
    print!("{}", summary.to_text());
    println!("artifacts = {}", cfg.out.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { common, mode, schedule } => {
            let mut cfg = common.config()?;
            if let Some(m) = mode {
                cfg.mode = m;
            }
            single_run(&cfg, schedule.as_deref())
        }
        Command::Fitness { common } => {
            let mut cfg = common.config()?;
            cfg.mode = Mode::ComplexityFitness;
            single_run(&cfg, None)
        }
        Command::Pairset { common, pairs } => {
            let cfg = common.config()?;
            let manifest = run_pairset(&cfg, &cfg.out, pairs, cfg.seed)?;
            let mut failed = 0;
            for p in &manifest.pairs {
                let state = |s: Status| format!("{s:?}").to_lowercase();
                println!(
                    "{} driven(seed {})={} lockstep(seed {})={}",
                    p.id(),
                    p.driven_seed,
                    state(p.driven),
                    p.replay_seed,
                    state(p.lockstep)
                );
                if let Some(e) = &p.error {
                    eprintln!("{}: {e}", p.id());
                    failed += 1;
                }
            }
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} of {pairs} pairs failed")));
            }
            Ok(())
        }
        Command::Analyze { out, neurons, bin_width } => {
            let root = out.unwrap_or_else(|| RunConfig::default().out);
            let mut cfg = RunConfig::load(&root.join(files::CONFIG))?;
            if let Some(n) = neurons {
                cfg.complexity.filter = n;
            }
            if let Some(w) = bin_width {
                cfg.analysis.bin_width = w;
            }
            cfg.validate()?;
            let dest = root.join("analysis");
            let result = analyze_set(&root, cfg.steps, &AnalysisOptions::from_config(&cfg), &dest)?;
            for (id, why) in &result.skipped {
                eprintln!("skipped {id}: {why}");
            }
            println!("pairs = {}", result.pairs.len());
            for b in &result.t.bins {
                let t = b.t.map_or("-".to_string(), |t| format!("{t:.3}"));
                let mark = if b.significant() { " *" } else { "" };
                println!("bin {:>6}: t = {t}{mark}", b.end_step);
            }
            println!("analysis = {}", dest.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Inconsistent(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
