//! Command-line harness for the Forrester comparison and the pendulum suite.
//!
//! Exit status: 0 on success, 1 if any cell failed, 2 on configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phys_adjust::bench::{
    emit_outputs, run_forrester, run_pendulum, ExperimentConfig, ExperimentKind, ForresterModel, Plots, ResultTable,
    RunMetadata,
};
use phys_adjust::control::Scenario;

#[derive(Parser)]
#[command(name = "phys-adjust", version, about = "Physics-adjusted surrogate benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grid-RMSE comparison of surrogates on the Forrester pair.
    Forrester {
        #[command(flatten)]
        common: Common,
        /// Comma-separated models, e.g. `crude-only,phy-mean-gp,cka,rra`.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<ForresterModel>>,
    },
    /// Dyna-SAC learning curves on the cart-pole swing-up.
    Pendulum {
        #[command(flatten)]
        common: Common,
        /// Comma-separated scenarios, e.g. `mf,dyna-cka`.
        #[arg(long, value_delimiter = ',')]
        scenarios: Option<Vec<Scenario>>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration; command-line flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Repetitions per model or scenario.
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory (default `results/<experiment>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reduced repetitions / trials for smoke runs.
    #[arg(long)]
    quick: bool,
}

fn resolve(common: &Common, kind: ExperimentKind) -> phys_adjust::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = kind;
    if common.quick {
        cfg = cfg.quick();
    }
    if let Some(s) = common.seed {
        cfg.root_seed = s;
    }
    if let Some(r) = common.reps {
        cfg.forrester.repetitions = r;
        cfg.pendulum.repetitions = r;
    }
    Ok(cfg)
}

fn finish(table: &ResultTable, out: &std::path::Path) -> ExitCode {
    let failed = table.failures();
    eprintln!("wrote {}", out.display());
    if failed > 0 {
        eprintln!("{failed} cell(s) failed; see results.csv");
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = RunMetadata::now_unix_s();
    let (common, kind) = match &cli.command {
        Command::Forrester { common, .. } => (common, ExperimentKind::Forrester),
        Command::Pendulum { common, .. } => (common, ExperimentKind::Pendulum),
    };
    let mut cfg = match resolve(common, kind) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match &cli.command {
        Command::Forrester { models: Some(m), .. } => cfg.forrester.models = m.clone(),
        Command::Pendulum { scenarios: Some(s), .. } => cfg.pendulum.scenarios = s.clone(),
        _ => {}
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("results").join(kind.to_string()));
    let meta = |finished| RunMetadata {
        started_unix_s: started,
        finished_unix_s: finished,
        command: std::env::args().collect(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };

    let result = match kind {
        ExperimentKind::Forrester => run_forrester(&cfg.forrester, cfg.root_seed).and_then(|o| {
            emit_outputs(&out, &cfg, Plots::Forrester(&o), &meta(RunMetadata::now_unix_s()))?;
            Ok(o.table)
        }),
        ExperimentKind::Pendulum => {
            let progress = |s: Scenario, rep: usize, r: &phys_adjust::control::TrialRecord| {
                eprintln!("{s} rep {rep} trial {:>2}: cost {:.3}", r.trial, r.normalized_cost);
            };
            run_pendulum(&cfg.pendulum, cfg.root_seed, Some(&progress)).and_then(|o| {
                emit_outputs(&out, &cfg, Plots::Pendulum(&o), &meta(RunMetadata::now_unix_s()))?;
                Ok(o.table)
            })
        }
    };
    match result {
        Ok(table) => finish(&table, &out),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
