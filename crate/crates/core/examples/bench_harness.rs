//! The experiment harness as a library: a reduced Forrester study written to
//! a directory as CSV/TOML/plot data, exactly as the `phys-adjust` binary does.
//!
//! ```text
//! cargo run --release --example bench_harness [out-dir]
//! ```

use std::path::PathBuf;

use phys_adjust::bench::{emit_outputs, run_forrester, ExperimentConfig, ForresterModel, Plots, RunMetadata};
use phys_adjust::surrogates::ModelKind;

fn main() -> phys_adjust::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("phys-adjust-bench"));
    let mut cfg = ExperimentConfig::default();
    cfg.root_seed = 11;
    cfg.forrester.repetitions = 5;
    cfg.forrester.models = vec![
        ForresterModel::CrudeOnly,
        ForresterModel::Surrogate(ModelKind::PhyMeanGp),
        ForresterModel::Surrogate(ModelKind::Cka),
        ForresterModel::Surrogate(ModelKind::Rra),
    ];
    let started = RunMetadata::now_unix_s();
    let result = run_forrester(&cfg.forrester, cfg.root_seed)?;
    for m in &cfg.forrester.models {
        let name = m.to_string();
        let mean = result.table.aggregate(&name, "mean", "rmse").unwrap_or(f64::NAN);
        let std = result.table.aggregate(&name, "std", "rmse").unwrap_or(f64::NAN);
        println!("{name:<12} rmse {mean:.3} +/- {std:.3}");
    }
    let meta = RunMetadata {
        started_unix_s: started,
        finished_unix_s: RunMetadata::now_unix_s(),
        command: std::env::args().collect(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    for path in emit_outputs(&out, &cfg, Plots::Forrester(&result), &meta)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
