//! Probabilistic surrogate models behind one interface, and the multi-output
//! dynamics wrapper built from them.
//!
//! Every model is scalar-output: it is fitted on `(x, y, f_p(x))` and predicts a
//! Gaussian per query row given `f_p` at the query rows. Vector-valued
//! physics models are handled one output at a time via [`ScalarPhysics`].

mod ar1;
mod dynamics;
mod gp;
mod rra;
mod standardize;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use ar1::{Ar1Config, Ar1Model};
pub use dynamics::{fit_dynamics, DynamicsModel};
pub use gp::{AdjustedGp, GpHyperparams};
pub use rra::{RraConfig, RraModel, SampledFunction};
pub use standardize::InputScaling;

use crate::error::{Error, Result};
use crate::numerics::OptimizerConfig;
use crate::physics::PhysicsModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    ZeroMeanGp,
    PhyMeanGp,
    GpBias,
    GpScale,
    Ar1,
    Cka,
    Rra,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::ZeroMeanGp,
        ModelKind::PhyMeanGp,
        ModelKind::GpBias,
        ModelKind::GpScale,
        ModelKind::Ar1,
        ModelKind::Cka,
        ModelKind::Rra,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::ZeroMeanGp => "zero-mean-gp",
            ModelKind::PhyMeanGp => "phy-mean-gp",
            ModelKind::GpBias => "gp-bias",
            ModelKind::GpScale => "gp-scale",
            ModelKind::Ar1 => "ar1",
            ModelKind::Cka => "cka",
            ModelKind::Rra => "rra",
        }
    }

    /// Whether fitting with zero observations yields a usable prior model.
    pub fn allows_empty(self) -> bool {
        matches!(self, ModelKind::Cka | ModelKind::Rra)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub optimizer: OptimizerConfig,
    /// Initial observation-noise standard deviation, in standardized units.
    pub initial_noise_std: f64,
    /// Optimize hyperparameters on a random subset of at most this many
    /// points; the posterior always conditions on every point.
    pub max_hyperopt_points: Option<usize>,
    pub ar1: Ar1Config,
    pub rra: RraConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::default(),
            initial_noise_std: 0.1,
            max_hyperopt_points: None,
            ar1: Ar1Config::default(),
            rra: RraConfig::default(),
        }
    }
}

impl FitConfig {
    /// Same configuration with every seed replaced by one derived from `seed`.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.optimizer.seed = crate::rng::derive_seed(seed, &[0]);
        c.rra.seed = crate::rng::derive_seed(seed, &[1]);
        c
    }
}

/// Training inputs (`N x d`) and outputs (`N x m`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::invalid(format!("{} input rows but {} output rows", x.nrows(), y.nrows())));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(Self { x, y })
    }

    /// One-dimensional inputs with scalar outputs.
    pub fn from_scalar(xs: &[f64], ys: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(xs.len(), 1, xs), DMatrix::from_column_slice(ys.len(), 1, ys))
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Independent Gaussians per query row and output dimension, in original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDistribution {
    pub mean: DMatrix<f64>,
    pub variance: DMatrix<f64>,
}

impl PredictiveDistribution {
    pub fn single(mean: DVector<f64>, variance: DVector<f64>) -> Self {
        let n = mean.len();
        Self {
            mean: DMatrix::from_column_slice(n, 1, mean.as_slice()),
            variance: DMatrix::from_column_slice(n, 1, variance.as_slice()),
        }
    }

    pub fn n_points(&self) -> usize {
        self.mean.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.mean.ncols()
    }

    pub fn mean_column(&self, j: usize) -> DVector<f64> {
        self.mean.column(j).into_owned()
    }

    pub fn variance_column(&self, j: usize) -> DVector<f64> {
        self.variance.column(j).into_owned()
    }
}

/// One output of a (possibly vector-valued) physics model.
#[derive(Debug, Clone, Copy)]
pub struct ScalarPhysics<'a> {
    pub model: &'a dyn PhysicsModel,
    pub output: usize,
}

impl<'a> ScalarPhysics<'a> {
    pub fn new(model: &'a dyn PhysicsModel, output: usize) -> Result<Self> {
        if output >= model.output_dim() {
            return Err(Error::invalid(format!(
                "physics model has {} outputs, requested output {output}",
                model.output_dim()
            )));
        }
        Ok(Self { model, output })
    }

    pub fn evaluate_rows(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(x.nrows());
        let mut row = vec![0.0; x.ncols()];
        for i in 0..x.nrows() {
            for (j, r) in row.iter_mut().enumerate() {
                *r = x[(i, j)];
            }
            out[i] = self.model.evaluate(&row)?[self.output];
        }
        Ok(out)
    }
}

/// A fitted scalar-output surrogate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Surrogate {
    Gp(AdjustedGp),
    Ar1(Ar1Model),
    Rra(RraModel),
}

const FORMAT_NAME: &str = "phys-adjust-surrogate";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<M> {
    format: String,
    version: u32,
    model: M,
}

impl Surrogate {
    pub fn kind(&self) -> ModelKind {
        match self {
            Surrogate::Gp(m) => m.kind(),
            Surrogate::Ar1(_) => ModelKind::Ar1,
            Surrogate::Rra(_) => ModelKind::Rra,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Surrogate::Gp(m) => m.input_dim(),
            Surrogate::Ar1(m) => m.input_dim(),
            Surrogate::Rra(m) => m.input_dim(),
        }
    }

    /// Predictive distribution at `x`, given the physics model evaluated there.
    pub fn predict(&self, x: &DMatrix<f64>, fp: &DVector<f64>) -> Result<PredictiveDistribution> {
        if x.iter().chain(fp.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("prediction inputs must be finite"));
        }
        if fp.len() != x.nrows() {
            return Err(Error::invalid("one physics value per query row is required"));
        }
        if x.ncols() != self.input_dim() {
            return Err(Error::invalid(format!("expected {} input columns, got {}", self.input_dim(), x.ncols())));
        }
        match self {
            Surrogate::Gp(m) => m.predict(x, fp),
            Surrogate::Ar1(m) => m.predict(x),
            Surrogate::Rra(m) => m.predict(x, fp),
        }
    }

    /// Convenience wrapper evaluating the physics model at `x` first.
    pub fn predict_with(&self, x: &DMatrix<f64>, physics: ScalarPhysics<'_>) -> Result<PredictiveDistribution> {
        let fp = physics.evaluate_rows(x)?;
        self.predict(x, &fp)
    }

    /// Training NLML in standardized units; `None` for closed-form models.
    pub fn nlml(&self) -> Option<f64> {
        match self {
            Surrogate::Gp(m) => Some(m.nlml()),
            Surrogate::Ar1(m) => Some(m.nlml()),
            Surrogate::Rra(_) => None,
        }
    }

    pub fn as_rra(&self) -> Option<&RraModel> {
        match self {
            Surrogate::Rra(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_gp(&self) -> Option<&AdjustedGp> {
        match self {
            Surrogate::Gp(m) => Some(m),
            _ => None,
        }
    }

    /// Versioned, self-describing JSON dump.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&Envelope {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            model: self,
        })
        .map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let env: Envelope<Surrogate> = serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        if env.format != FORMAT_NAME || env.version != FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model format {} v{}",
                env.format, env.version
            )));
        }
        let mut model = env.model;
        match &mut model {
            Surrogate::Gp(m) => m.refresh()?,
            Surrogate::Ar1(m) => m.refresh()?,
            Surrogate::Rra(_) => {}
        }
        Ok(model)
    }
}

/// Fits a scalar surrogate of kind `kind` to column `physics.output` of `data.y`.
pub fn fit(kind: ModelKind, data: &Dataset, physics: ScalarPhysics<'_>, config: &FitConfig) -> Result<Surrogate> {
    if data.x.ncols() != physics.model.input_dim() {
        return Err(Error::invalid(format!(
            "dataset has {} input columns, physics model expects {}",
            data.x.ncols(),
            physics.model.input_dim()
        )));
    }
    let col = if data.y.ncols() == 1 { 0 } else { physics.output };
    if col >= data.y.ncols() {
        return Err(Error::invalid("output column out of range"));
    }
    let y = data.y.column(col).into_owned();
    let fp = physics.evaluate_rows(&data.x)?;
    fit_scalar(kind, &data.x, &y, &fp, physics, config)
}

/// Fits with precomputed physics values at the training inputs.
pub fn fit_scalar(
    kind: ModelKind,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    fp: &DVector<f64>,
    physics: ScalarPhysics<'_>,
    config: &FitConfig,
) -> Result<Surrogate> {
    Ok(match kind {
        ModelKind::Ar1 => Surrogate::Ar1(Ar1Model::fit(x, y, physics, config)?),
        ModelKind::Rra => Surrogate::Rra(RraModel::fit(x, y, fp, &config.rra)?),
        _ => Surrogate::Gp(AdjustedGp::fit(kind, x, y, fp, config)?),
    })
}
