use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{fit_scalar, FitConfig, ModelKind, PredictiveDistribution, ScalarPhysics, Surrogate};
use crate::control::Transition;
use crate::error::{Error, Result};
use crate::physics::PhysicsModel;
use crate::rng;

/// Maps `[state, action]` to a distribution over the next state, with one
/// independent scalar surrogate per state dimension.
#[derive(Debug, Clone)]
pub struct DynamicsModel {
    physics: Arc<dyn PhysicsModel>,
    /// `None` means the physics model is used as-is with zero variance.
    models: Option<Vec<Surrogate>>,
    kind: Option<ModelKind>,
}

/// Builds `X = [s, a]`, `y = s'` from the transitions and fits one surrogate
/// per output dimension, each with its own component of `f_p` as the prior.
pub fn fit_dynamics(
    transitions: &[Transition],
    physics: Arc<dyn PhysicsModel>,
    kind: ModelKind,
    config: &FitConfig,
) -> Result<DynamicsModel> {
    let d = physics.input_dim();
    let m = physics.output_dim();
    let n = transitions.len();
    let mut x = DMatrix::zeros(n, d);
    let mut y = DMatrix::zeros(n, m);
    for (i, t) in transitions.iter().enumerate() {
        if t.state.len() + t.action.len() != d || t.next_state.len() != m {
            return Err(Error::invalid(format!(
                "transition {i} has dims ({}, {}, {}), physics model expects {d} inputs and {m} outputs",
                t.state.len(),
                t.action.len(),
                t.next_state.len()
            )));
        }
        for (j, v) in t.state.iter().chain(&t.action).enumerate() {
            x[(i, j)] = *v;
        }
        for (j, v) in t.next_state.iter().enumerate() {
            y[(i, j)] = *v;
        }
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("transitions contain non-finite values"));
    }

    // physics is evaluated once per row for all outputs
    let mut fp = DMatrix::zeros(n, m);
    let mut row = vec![0.0; d];
    for i in 0..n {
        for (j, r) in row.iter_mut().enumerate() {
            *r = x[(i, j)];
        }
        let out = physics.evaluate(&row)?;
        for j in 0..m {
            fp[(i, j)] = out[j];
        }
    }

    let models = (0..m)
        .into_par_iter()
        .map(|j| {
            let cfg = config.reseeded(rng::derive_seed(config.optimizer.seed, &[j as u64]));
            let sp = ScalarPhysics::new(physics.as_ref(), j)?;
            fit_scalar(kind, &x, &y.column(j).into_owned(), &fp.column(j).into_owned(), sp, &cfg)
                .map_err(|e| e.context(format!("dynamics output {j}")))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(DynamicsModel {
        physics,
        models: Some(models),
        kind: Some(kind),
    })
}

impl DynamicsModel {
    /// The physics model as a deterministic (zero-variance) dynamics model.
    pub fn physics_only(physics: Arc<dyn PhysicsModel>) -> Self {
        Self {
            physics,
            models: None,
            kind: None,
        }
    }

    pub fn kind(&self) -> Option<ModelKind> {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.physics.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.physics.output_dim()
    }

    pub fn physics(&self) -> &Arc<dyn PhysicsModel> {
        &self.physics
    }

    pub fn surrogates(&self) -> &[Surrogate] {
        self.models.as_deref().unwrap_or(&[])
    }

    /// Standardized training NLML per output dimension (NaN where not applicable).
    pub fn fit_nlml(&self) -> Vec<f64> {
        self.surrogates().iter().map(|s| s.nlml().unwrap_or(f64::NAN)).collect()
    }

    /// Predictions for every row of `x` (`n x d`), returning `n x m`.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<PredictiveDistribution> {
        if x.ncols() != self.input_dim() {
            return Err(Error::invalid(format!("expected {} input columns, got {}", self.input_dim(), x.ncols())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dynamics query contains non-finite values"));
        }
        let n = x.nrows();
        let m = self.output_dim();
        let mut fp = DMatrix::zeros(n, m);
        let mut row = vec![0.0; x.ncols()];
        for i in 0..n {
            for (j, r) in row.iter_mut().enumerate() {
                *r = x[(i, j)];
            }
            let out = self.physics.evaluate(&row)?;
            for j in 0..m {
                fp[(i, j)] = out[j];
            }
        }
        let Some(models) = &self.models else {
            return Ok(PredictiveDistribution {
                mean: fp,
                variance: DMatrix::zeros(n, m),
            });
        };
        let mut mean = DMatrix::zeros(n, m);
        let mut variance = DMatrix::zeros(n, m);
        for (j, model) in models.iter().enumerate() {
            let col: DVector<f64> = fp.column(j).into_owned();
            let p = model.predict(x, &col)?;
            mean.set_column(j, &p.mean.column(0));
            variance.set_column(j, &p.variance.column(0));
        }
        Ok(PredictiveDistribution { mean, variance })
    }

    pub fn predict_next_state(&self, state: &[f64], action: &[f64]) -> Result<PredictiveDistribution> {
        let row: Vec<f64> = state.iter().chain(action).copied().collect();
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("state and action must be finite"));
        }
        self.predict(&DMatrix::from_row_slice(1, row.len(), &row))
    }
}
