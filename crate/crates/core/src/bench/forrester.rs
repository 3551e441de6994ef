use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{forrester_seed, mean_std, ForresterConfig, ForresterModel, ResultTable};
use crate::error::Result;
use crate::physics::{forrester_crude, forrester_true, ForresterCrude};
use crate::rng;
use crate::surrogates::{fit, Dataset, ScalarPhysics};

const EXPERIMENT: &str = "forrester";

/// Predictive means and standard deviations on the evaluation grid for the
/// first repetition (the per-model panels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForresterPredictions {
    pub x: Vec<f64>,
    pub f_true: Vec<f64>,
    pub f_p: Vec<f64>,
    pub observations: Vec<(f64, f64)>,
    /// `(model, mean, std)`; empty vectors for failed fits.
    pub models: Vec<(String, Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct ForresterOutput {
    pub table: ResultTable,
    pub predictions: ForresterPredictions,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Observations of the true function at inputs drawn uniformly from the
/// configured range.
pub(crate) fn sample_observations(cfg: &ForresterConfig, seed: u64) -> Result<Dataset> {
    let mut r = rng::seeded(seed);
    let (lo, hi) = cfg.observation_range;
    let xs: Vec<f64> = (0..cfg.observations).map(|_| r.random_range(lo..hi)).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| forrester_true(x)).collect();
    Dataset::from_scalar(&xs, &ys)
}

type Cell = std::result::Result<(Vec<f64>, Vec<f64>), String>;

fn run_rep(cfg: &ForresterConfig, seed: u64, grid: &DMatrix<f64>, fp: &DVector<f64>) -> (Dataset, Vec<Cell>) {
    let data = match sample_observations(cfg, seed) {
        Ok(d) => d,
        Err(e) => {
            let msg = e.to_string();
            return (Dataset::from_scalar(&[], &[]).expect("empty dataset"), cfg.models.iter().map(|_| Err(msg.clone())).collect());
        }
    };
    let fit_cfg = cfg.fit.reseeded(seed);
    let physics = ScalarPhysics { model: &ForresterCrude, output: 0 };
    let cells = cfg
        .models
        .iter()
        .map(|m| match m {
            ForresterModel::CrudeOnly => Ok((fp.iter().copied().collect(), vec![0.0; fp.len()])),
            ForresterModel::Surrogate(kind) => fit(*kind, &data, physics, &fit_cfg)
                .and_then(|s| s.predict(grid, fp))
                .map(|p| (p.mean.iter().copied().collect(), p.variance.iter().map(|v| v.sqrt()).collect()))
                .map_err(|e| e.to_string()),
        })
        .collect();
    (data, cells)
}

/// Fits every configured model on every repetition and reports grid RMSE
/// against the true function. Failed fits become `error` rows.
pub fn run_forrester(cfg: &ForresterConfig, root_seed: u64) -> Result<ForresterOutput> {
    let x = linspace(cfg.grid_range.0, cfg.grid_range.1, cfg.grid_size);
    let f_true: Vec<f64> = x.iter().map(|&v| forrester_true(v)).collect();
    let f_p: Vec<f64> = x.iter().map(|&v| forrester_crude(v)).collect();
    let grid = DMatrix::from_column_slice(x.len(), 1, &x);
    let fp = DVector::from_column_slice(&f_p);

    let reps: Vec<(Dataset, Vec<Cell>)> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| run_rep(cfg, forrester_seed(root_seed, rep), &grid, &fp))
        .collect();

    let rmse = |mean: &[f64]| {
        (mean.iter().zip(&f_true).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / f_true.len() as f64).sqrt()
    };
    let mut table = ResultTable::default();
    for (k, model) in cfg.models.iter().enumerate() {
        let name = model.to_string();
        let mut ok = Vec::new();
        for (rep, (_, cells)) in reps.iter().enumerate() {
            match &cells[k] {
                Ok((mean, _)) => {
                    let e = rmse(mean);
                    ok.push(e);
                    table.push(EXPERIMENT, &name, rep, "rmse", e);
                }
                Err(msg) => table.push(EXPERIMENT, &name, rep, "error", msg),
            }
        }
        let (m, s) = mean_std(&ok);
        table.push(EXPERIMENT, &name, "mean", "rmse", m);
        table.push(EXPERIMENT, &name, "std", "rmse", s);
    }

    let first = reps.first();
    let predictions = ForresterPredictions {
        observations: first
            .map(|(d, _)| d.x.iter().zip(d.y.iter()).map(|(a, b)| (*a, *b)).collect())
            .unwrap_or_default(),
        models: cfg
            .models
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let (mean, std) = first.and_then(|(_, c)| c[k].clone().ok()).unwrap_or_default();
                (m.to_string(), mean, std)
            })
            .collect(),
        x,
        f_true,
        f_p,
    };
    Ok(ForresterOutput { table, predictions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogates::ModelKind;

    fn small() -> ForresterConfig {
        let mut c = ForresterConfig::default();
        c.repetitions = 3;
        c.fit.optimizer.restarts = 1;
        c.fit.optimizer.iterations = 60;
        c.fit.ar1.low_fidelity_points = 10;
        c
    }

    #[test]
    fn table_accounting() {
        let c = small();
        let out = run_forrester(&c, 0).unwrap();
        assert_eq!(out.table.rows.len(), c.models.len() * (c.repetitions + 2));
        assert_eq!(out.table.failures(), 0);
        let crude = out.table.values("crude-only", "rmse");
        assert!(crude[0] > 0.0 && crude.iter().all(|v| *v == crude[0]));
        assert_eq!(out.predictions.x.len(), 40);
        assert!((out.predictions.x[0] + 0.6).abs() < 1e-15 && (out.predictions.x[39] - 1.0).abs() < 1e-15);
        assert_eq!(out.predictions.observations.len(), 8);
    }

    #[test]
    fn equivalent_models_match() {
        let mut c = small();
        c.models = vec![ForresterModel::Surrogate(ModelKind::PhyMeanGp), ForresterModel::Surrogate(ModelKind::GpBias)];
        let out = run_forrester(&c, 4).unwrap();
        let a = out.table.values("phy-mean-gp", "rmse");
        let b = out.table.values("gp-bias", "rmse");
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() <= 1e-10);
        }
    }
}
