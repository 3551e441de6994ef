use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{mean_std, ExperimentConfig, ForresterOutput, PendulumOutput, ResultTable};
use crate::error::{Error, Result};

/// Non-reproducible facts about a run, kept out of every other file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub command: Vec<String>,
    pub version: String,
}

impl RunMetadata {
    pub fn now_unix_s() -> f64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64())
    }
}

/// What to turn into plot-data files.
#[derive(Debug, Clone, Copy)]
pub enum Plots<'a> {
    Forrester(&'a ForresterOutput),
    Pendulum(&'a PendulumOutput),
}

impl Plots<'_> {
    fn table(&self) -> &ResultTable {
        match self {
            Plots::Forrester(o) => &o.table,
            Plots::Pendulum(o) => &o.table,
        }
    }
}

fn write(dir: &Path, name: &str, content: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn csv_lines(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Serialization(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| Error::Serialization(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

/// `model -> {seed_metric -> value}` from the aggregate rows.
fn summary(table: &ResultTable) -> Result<String> {
    let mut models: BTreeMap<String, BTreeMap<String, toml::Value>> = BTreeMap::new();
    for r in table.rows.iter().filter(|r| r.seed.parse::<usize>().is_err()) {
        let key = format!("{}_{}", r.metric, r.seed);
        let value = match r.value.parse::<f64>() {
            Ok(v) if v.is_finite() => toml::Value::Float(v),
            _ => toml::Value::String(r.value.clone()),
        };
        models.entry(r.model.clone()).or_default().insert(key, value);
    }
    for r in table.rows.iter().filter(|r| r.metric == "error") {
        let e = models.entry(r.model.clone()).or_default();
        let n = e.get("failed_cells").and_then(|v| v.as_integer()).unwrap_or(0);
        e.insert("failed_cells".into(), toml::Value::Integer(n + 1));
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        rows: usize,
        failed_cells: usize,
        models: &'a BTreeMap<String, BTreeMap<String, toml::Value>>,
    }
    toml::to_string(&Summary { rows: table.rows.len(), failed_cells: table.failures(), models: &models })
        .map_err(|e| Error::Serialization(e.to_string()))
}

/// Writes `results.csv`, `summary.toml`, `config.toml`, plot-data CSVs,
/// per-run logs (pendulum) and `metadata.json` into `dir`. Everything except
/// `metadata.json` and the wall-time fields of the logs is a pure function of
/// the configuration.
pub fn emit_outputs(dir: &Path, config: &ExperimentConfig, plots: Plots<'_>, meta: &RunMetadata) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let table = plots.table();
    write(dir, "results.csv", &table.to_csv()?, &mut written)?;
    write(dir, "summary.toml", &summary(table)?, &mut written)?;
    write(dir, "config.toml", &config.to_toml()?, &mut written)?;

    match plots {
        Plots::Forrester(o) => {
            let p = &o.predictions;
            let mut header: Vec<String> = ["x", "f_true", "f_p"].map(String::from).to_vec();
            for (m, _, _) in &p.models {
                header.push(format!("{m}_mean"));
                header.push(format!("{m}_std"));
            }
            let rows = (0..p.x.len()).map(|i| {
                let mut r = vec![p.x[i].to_string(), p.f_true[i].to_string(), p.f_p[i].to_string()];
                for (_, mean, std) in &p.models {
                    r.push(mean.get(i).map_or(String::new(), f64::to_string));
                    r.push(std.get(i).map_or(String::new(), f64::to_string));
                }
                r
            });
            write(dir, "forrester_predictions.csv", &csv_lines(&header, rows)?, &mut written)?;
            let obs = p.observations.iter().map(|(x, y)| vec![x.to_string(), y.to_string()]);
            write(dir, "forrester_observations.csv", &csv_lines(&["x".into(), "y".into()], obs)?, &mut written)?;
            let bars = p.models.iter().map(|(m, _, _)| {
                let mean = o.table.aggregate(m, "mean", "rmse").unwrap_or(f64::NAN);
                let std = o.table.aggregate(m, "std", "rmse").unwrap_or(f64::NAN);
                vec![m.clone(), mean.to_string(), std.to_string()]
            });
            let header = ["model", "rmse_mean", "rmse_std"].map(String::from);
            write(dir, "forrester_rmse.csv", &csv_lines(&header, bars)?, &mut written)?;
        }
        Plots::Pendulum(o) => {
            let mut scenarios: Vec<_> = o.runs.iter().map(|r| r.0).collect();
            scenarios.dedup();
            let trials = o.runs.iter().filter_map(|r| r.2.as_ref().ok()).map(|r| r.curve.len()).max().unwrap_or(0);
            let mut header = vec!["trial".to_string()];
            for s in &scenarios {
                header.push(format!("{s}_mean"));
                header.push(format!("{s}_std"));
            }
            let rows = (0..trials).map(|t| {
                let mut r = vec![(t + 1).to_string()];
                for s in &scenarios {
                    let v: Vec<f64> = o
                        .runs
                        .iter()
                        .filter(|r| r.0 == *s)
                        .filter_map(|r| r.2.as_ref().ok().and_then(|run| run.curve.get(t).copied()))
                        .collect();
                    let (m, sd) = mean_std(&v);
                    r.push(m.to_string());
                    r.push(sd.to_string());
                }
                r
            });
            write(dir, "pendulum_curves.csv", &csv_lines(&header, rows)?, &mut written)?;
            let per_run = o.runs.iter().filter_map(|(s, rep, r)| r.as_ref().ok().map(|r| (s, rep, r))).flat_map(
                |(s, rep, r)| {
                    r.curve.iter().enumerate().map(move |(t, c)| vec![s.to_string(), rep.to_string(), (t + 1).to_string(), c.to_string()])
                },
            );
            let header = ["scenario", "rep", "trial", "cost"].map(String::from);
            write(dir, "pendulum_runs.csv", &csv_lines(&header, per_run)?, &mut written)?;
            for (name, log) in &o.logs {
                write(dir, &format!("logs/{name}.jsonl"), log, &mut written)?;
            }
        }
    }
    let meta_json = serde_json::to_string_pretty(meta).map_err(|e| Error::Serialization(e.to_string()))?;
    write(dir, "metadata.json", &meta_json, &mut written)?;
    Ok(written)
}
