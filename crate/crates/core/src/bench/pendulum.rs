use rayon::prelude::*;

use super::{mean_std, median, pendulum_seed, PendulumConfig, ResultTable};
use crate::control::{run_dyna_scenario_logged, Scenario, ScenarioRun, TrialRecord};
use crate::error::Result;

const EXPERIMENT: &str = "pendulum";

#[derive(Debug, Clone)]
pub struct PendulumOutput {
    pub table: ResultTable,
    /// `(scenario, repetition, run or error message)`, in configuration order.
    pub runs: Vec<(Scenario, usize, std::result::Result<ScenarioRun, String>)>,
    /// Line-delimited JSON trial records per run, keyed `<scenario>_<rep>`.
    pub logs: Vec<(String, String)>,
    pub threshold: f64,
}

pub type Progress<'a> = &'a (dyn Fn(Scenario, usize, &TrialRecord) + Sync);

/// Runs every scenario for every repetition. Runs are independent; a failed
/// run is recorded and the rest continue.
pub fn run_pendulum(cfg: &PendulumConfig, root_seed: u64, progress: Option<Progress<'_>>) -> Result<PendulumOutput> {
    let jobs: Vec<(Scenario, usize)> =
        cfg.scenarios.iter().flat_map(|&s| (0..cfg.repetitions).map(move |r| (s, r))).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(scenario, rep)| {
            let mut log = String::new();
            let run = run_dyna_scenario_logged(scenario, &cfg.dyna, pendulum_seed(root_seed, scenario, rep), &mut |r| {
                if let Ok(line) = serde_json::to_string(r) {
                    log.push_str(&line);
                    log.push('\n');
                }
                if let Some(p) = progress {
                    p(scenario, rep, r);
                }
            });
            (scenario, rep, run.map_err(|e| e.to_string()), log)
        })
        .collect();

    let mut table = ResultTable::default();
    let mut runs = Vec::with_capacity(results.len());
    let mut logs = Vec::with_capacity(results.len());
    for &scenario in &cfg.scenarios {
        let name = scenario.to_string();
        let (mut to, mut fin, mut avg) = (Vec::new(), Vec::new(), Vec::new());
        for (s, rep, run, _) in results.iter().filter(|r| r.0 == scenario) {
            debug_assert_eq!(*s, scenario);
            match run {
                Ok(r) => {
                    let t = r.trials_to(cfg.threshold).map_or(f64::INFINITY, |t| t as f64);
                    let last = *r.curve.last().unwrap_or(&f64::NAN);
                    let mean = r.curve.iter().sum::<f64>() / r.curve.len() as f64;
                    table.push(EXPERIMENT, &name, rep, "trials_to_threshold", t);
                    table.push(EXPERIMENT, &name, rep, "final_cost", last);
                    table.push(EXPERIMENT, &name, rep, "mean_cost", mean);
                    table.push(EXPERIMENT, &name, rep, "real_steps", r.real_steps);
                    to.push(t);
                    fin.push(last);
                    avg.push(mean);
                }
                Err(msg) => table.push(EXPERIMENT, &name, rep, "error", msg),
            }
        }
        table.push(EXPERIMENT, &name, "median", "trials_to_threshold", median(&to));
        table.push(EXPERIMENT, &name, "count", "reached_threshold", to.iter().filter(|t| t.is_finite()).count());
        for (metric, v) in [("final_cost", &fin), ("mean_cost", &avg)] {
            let (m, s) = mean_std(v);
            table.push(EXPERIMENT, &name, "mean", metric, m);
            table.push(EXPERIMENT, &name, "std", metric, s);
        }
    }
    for (scenario, rep, run, log) in results {
        logs.push((format!("{scenario}_{rep}"), log));
        runs.push((scenario, rep, run));
    }
    Ok(PendulumOutput { table, runs, logs, threshold: cfg.threshold })
}
