//! Ridge regression adjustment.
//!
//! `rho(x) = 1 + Phi_rho(x) beta_rho` and `delta(x) = Phi_delta(x) beta_delta`
//! over random Fourier features. The residual `y - f_p(x)` is regressed on the
//! concatenated design `[diag(f_p) Phi_rho, Phi_delta]`; ridge shrinkage of
//! `beta` toward zero therefore pulls predictions back to `f_p`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::standardize::{residual_scale, InputScaling};
use super::PredictiveDistribution;
use crate::error::{Error, Result};
use crate::numerics::{factorize, factorize_regularized, make_rff_map, rff_features, RffMap};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RraConfig {
    /// Random features per adjustment function.
    pub features: usize,
    /// Ridge penalty.
    pub lambda: f64,
    /// RFF lengthscale, in standardized units when `standardize_inputs` is set
    /// and in raw input units otherwise.
    pub lengthscale: f64,
    pub standardize_inputs: bool,
    /// Divide residual targets by their RMS before regressing.
    pub scale_outputs: bool,
    pub seed: u64,
}

impl Default for RraConfig {
    fn default() -> Self {
        Self {
            features: 100,
            lambda: 1.0,
            lengthscale: 1.0,
            standardize_inputs: true,
            scale_outputs: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RraModel {
    scaling: InputScaling,
    output_scale: f64,
    map_rho: RffMap,
    map_delta: RffMap,
    beta_mean: DVector<f64>,
    beta_cov: DMatrix<f64>,
    noise_var: f64,
    lambda: f64,
    x: DMatrix<f64>,
    y: DVector<f64>,
    fp_at_train: DVector<f64>,
}

impl RraModel {
    pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>, fp: &DVector<f64>, cfg: &RraConfig) -> Result<Self> {
        let n = x.nrows();
        let d = x.ncols();
        if y.len() != n || fp.len() != n {
            return Err(Error::invalid("inputs, targets and physics values must have the same length"));
        }
        if !(cfg.lambda > 0.0) {
            return Err(Error::Config(format!("ridge penalty must be positive, got {}", cfg.lambda)));
        }
        let scaling = if cfg.standardize_inputs { InputScaling::fit(x) } else { InputScaling::identity(d) };
        let resid = y - fp;
        let c = if cfg.scale_outputs { residual_scale(resid.as_slice()) } else { 1.0 };
        let map_rho = make_rff_map(d, cfg.features, cfg.lengthscale, rng::derive_seed(cfg.seed, &[0]))?;
        let map_delta = make_rff_map(d, cfg.features, cfg.lengthscale, rng::derive_seed(cfg.seed, &[1]))?;

        let mut model = Self {
            scaling,
            output_scale: c,
            map_rho,
            map_delta,
            beta_mean: DVector::zeros(2 * cfg.features),
            beta_cov: DMatrix::zeros(2 * cfg.features, 2 * cfg.features),
            noise_var: 1.0,
            lambda: cfg.lambda,
            x: x.clone(),
            y: y.clone(),
            fp_at_train: fp.clone(),
        };

        let design = model.design_matrix(x, fp)?;
        let target = &resid / c;
        let mut gram = design.tr_mul(&design);
        for i in 0..gram.nrows() {
            gram[(i, i)] += cfg.lambda;
        }
        let factor = factorize_regularized(&gram).map_err(|e| e.context("ridge normal equations"))?;
        let beta = factor.solve_vec(&design.tr_mul(&target));
        if n > 0 {
            let fitted = &design * &beta;
            model.noise_var = ((&target - fitted).norm_squared() / n as f64).max(1e-12);
        }
        model.beta_cov = factor.inverse() * model.noise_var;
        model.beta_mean = beta;
        Ok(model)
    }

    /// Concatenated design `[diag(f_p / c) Phi_rho(x), Phi_delta(x)]`.
    pub fn design_matrix(&self, x: &DMatrix<f64>, fp: &DVector<f64>) -> Result<DMatrix<f64>> {
        if fp.len() != x.nrows() {
            return Err(Error::invalid("one physics value per query row is required"));
        }
        if x.ncols() != self.input_dim() {
            return Err(Error::invalid(format!("expected {} input columns, got {}", self.input_dim(), x.ncols())));
        }
        let xs = self.scaling.apply(x);
        let phi_rho = rff_features(&self.map_rho, &xs)?;
        let phi_delta = rff_features(&self.map_delta, &xs)?;
        let dr = phi_rho.ncols();
        let dd = phi_delta.ncols();
        let c = self.output_scale;
        Ok(DMatrix::from_fn(x.nrows(), dr + dd, |i, j| {
            if j < dr {
                fp[i] / c * phi_rho[(i, j)]
            } else {
                phi_delta[(i, j - dr)]
            }
        }))
    }

    pub fn input_dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn beta_mean(&self) -> &DVector<f64> {
        &self.beta_mean
    }

    pub fn beta_cov(&self) -> &DMatrix<f64> {
        &self.beta_cov
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn output_scale(&self) -> f64 {
        self.output_scale
    }

    /// Residual variance of the ridge fit, in the regression's units.
    pub fn noise_variance(&self) -> f64 {
        self.noise_var
    }

    pub fn maps(&self) -> (&RffMap, &RffMap) {
        (&self.map_rho, &self.map_delta)
    }

    pub fn training_data(&self) -> (&DMatrix<f64>, &DVector<f64>, &DVector<f64>) {
        (&self.x, &self.y, &self.fp_at_train)
    }

    fn evaluate_with(&self, x: &DMatrix<f64>, fp: &DVector<f64>, beta: &DVector<f64>) -> Result<DVector<f64>> {
        let a = self.design_matrix(x, fp)?;
        Ok(fp + (a * beta) * self.output_scale)
    }

    pub fn predict(&self, x: &DMatrix<f64>, fp: &DVector<f64>) -> Result<PredictiveDistribution> {
        let a = self.design_matrix(x, fp)?;
        let c = self.output_scale;
        let mean = fp + (&a * &self.beta_mean) * c;
        let sa = &a * &self.beta_cov;
        let var = DVector::from_fn(x.nrows(), |i, _| {
            c * c * (sa.row(i).dot(&a.row(i)).max(0.0) + self.noise_var)
        });
        Ok(PredictiveDistribution::single(mean, var))
    }

    /// Draws one coefficient vector from the posterior and freezes it.
    pub fn sample_function(&self, seed: u64) -> Result<SampledFunction> {
        let beta = if self.beta_cov.iter().all(|v| *v == 0.0) {
            self.beta_mean.clone()
        } else {
            let factor = factorize(&self.beta_cov)
                .map_err(|e| Error::Sampling(format!("coefficient covariance is not PSD: {e}")))?;
            let mut r = rng::seeded(seed);
            let z = DVector::from_fn(self.beta_mean.len(), |_, _| StandardNormal.sample(&mut r));
            &self.beta_mean + factor.lower() * z
        };
        Ok(SampledFunction { model: self.clone(), beta })
    }

    /// Same model with a replaced coefficient covariance.
    pub fn with_beta_cov(mut self, cov: DMatrix<f64>) -> Self {
        self.beta_cov = cov;
        self
    }
}

/// A deterministic function `f_p(x) + c [diag(f_p/c) Phi_rho, Phi_delta] beta`
/// with `beta` fixed at one posterior draw.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    model: RraModel,
    beta: DVector<f64>,
}

impl SampledFunction {
    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn evaluate(&self, x: &DMatrix<f64>, fp: &DVector<f64>) -> Result<DVector<f64>> {
        self.model.evaluate_with(x, fp, &self.beta)
    }
}
