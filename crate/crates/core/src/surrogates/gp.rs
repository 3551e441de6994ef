//! Gaussian-process surrogates sharing the adjustment structure
//! `f_a(x) = rho(x) f_p(x) + delta(x)`.
//!
//! | kind        | prior mean | rho channel | delta channel |
//! |-------------|------------|-------------|---------------|
//! | zero-mean   | 0          | no          | yes           |
//! | phy-mean    | f_p        | no          | yes           |
//! | gp-bias     | f_p        | no (rho=1)  | yes           |
//! | gp-scale    | f_p        | yes         | no            |
//! | cka         | f_p        | yes         | yes           |
//!
//! With `F` the diagonal of `f_p` at the inputs, the covariance of the
//! observations is `K = F k_rho F + k_delta + sigma^2 I`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::standardize::{residual_scale, InputScaling};
use super::{FitConfig, ModelKind, PredictiveDistribution};
use crate::error::{Error, Result};
use crate::numerics::{
    factorize, nlml_with_gradient, optimize_hyperparams, rbf_kernel, rbf_kernel_with_grads, CholeskyFactor,
    KernelParams, NoiseParam,
};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Structure {
    physics_mean: bool,
    rho: bool,
    delta: bool,
}

impl Structure {
    fn of(kind: ModelKind) -> Result<Self> {
        let s = match kind {
            ModelKind::ZeroMeanGp => Self { physics_mean: false, rho: false, delta: true },
            ModelKind::PhyMeanGp | ModelKind::GpBias => Self { physics_mean: true, rho: false, delta: true },
            ModelKind::GpScale => Self { physics_mean: true, rho: true, delta: false },
            ModelKind::Cka => Self { physics_mean: true, rho: true, delta: true },
            other => return Err(Error::invalid(format!("{other} is not a single-GP model"))),
        };
        Ok(s)
    }
}

/// Hyperparameters of one GP in the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub rho: Option<KernelParams>,
    pub delta: Option<KernelParams>,
    pub noise: NoiseParam,
}

impl GpHyperparams {
    fn initial(s: Structure, dim: usize, noise_std: f64) -> Self {
        Self {
            rho: s.rho.then(|| KernelParams::unit(dim)),
            delta: s.delta.then(|| KernelParams::unit(dim)),
            noise: NoiseParam::new(noise_std),
        }
    }

    fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::new();
        if let Some(p) = &self.rho {
            p.write_flat(&mut v);
        }
        if let Some(p) = &self.delta {
            p.write_flat(&mut v);
        }
        v.push(self.noise.log_noise_std);
        v
    }

    fn from_flat(s: Structure, dim: usize, flat: &[f64]) -> Self {
        let mut rest = flat;
        let rho = s.rho.then(|| {
            let (p, r) = KernelParams::read_flat(dim, rest);
            rest = r;
            p
        });
        let delta = s.delta.then(|| {
            let (p, r) = KernelParams::read_flat(dim, rest);
            rest = r;
            p
        });
        Self {
            rho,
            delta,
            noise: NoiseParam { log_noise_std: rest[0] },
        }
    }

    fn prior_variance(&self, fs: f64) -> f64 {
        self.rho.as_ref().map_or(0.0, |p| fs * fs * p.signal_variance())
            + self.delta.as_ref().map_or(0.0, |p| p.signal_variance())
    }
}

/// Training covariance (standardized units) and, optionally, its derivative
/// with respect to every flattened hyperparameter.
fn covariance(
    xs: &DMatrix<f64>,
    fs: &DVector<f64>,
    hp: &GpHyperparams,
    with_grads: bool,
) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
    let n = xs.nrows();
    let mut k = DMatrix::zeros(n, n);
    let mut grads = Vec::new();
    if let Some(p) = &hp.rho {
        let scale = |m: &mut DMatrix<f64>| {
            for j in 0..n {
                for i in 0..n {
                    m[(i, j)] *= fs[i] * fs[j];
                }
            }
        };
        if with_grads {
            let (mut kr, mut gr) = rbf_kernel_with_grads(xs, p)?;
            scale(&mut kr);
            gr.iter_mut().for_each(scale);
            k += kr;
            grads.extend(gr);
        } else {
            let mut kr = rbf_kernel(xs, xs, p)?;
            scale(&mut kr);
            k += kr;
        }
    }
    if let Some(p) = &hp.delta {
        if with_grads {
            let (kd, gd) = rbf_kernel_with_grads(xs, p)?;
            k += kd;
            grads.extend(gd);
        } else {
            k += rbf_kernel(xs, xs, p)?;
        }
    }
    let s2 = hp.noise.variance();
    for i in 0..n {
        k[(i, i)] += s2;
    }
    if with_grads {
        grads.push(DMatrix::from_diagonal_element(n, n, 2.0 * s2));
    }
    Ok((k, grads))
}

#[derive(Debug, Clone)]
struct Posterior {
    xs: DMatrix<f64>,
    fs: DVector<f64>,
    factor: CholeskyFactor,
    alpha: DVector<f64>,
}

/// A fitted member of the GP family (zero-mean, physics-mean, GP-bias,
/// GP-scale or CKA).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdjustedGp {
    kind: ModelKind,
    scaling: InputScaling,
    output_scale: f64,
    x: DMatrix<f64>,
    y: DVector<f64>,
    fp: DVector<f64>,
    params: GpHyperparams,
    nlml: f64,
    #[serde(skip)]
    posterior: Option<Posterior>,
}

impl AdjustedGp {
    pub fn fit(kind: ModelKind, x: &DMatrix<f64>, y: &DVector<f64>, fp: &DVector<f64>, cfg: &FitConfig) -> Result<Self> {
        let s = Structure::of(kind)?;
        let n = x.nrows();
        if y.len() != n || fp.len() != n {
            return Err(Error::invalid("inputs, targets and physics values must have the same length"));
        }
        if n == 0 && kind != ModelKind::Cka {
            return Err(Error::invalid(format!("{kind} needs at least one observation")));
        }
        let mean: DVector<f64> = if s.physics_mean { fp.clone() } else { DVector::zeros(n) };
        let raw_resid = y - &mean;
        let scaling = InputScaling::fit(x);
        let c = residual_scale(raw_resid.as_slice());
        let xs = scaling.apply(x);
        let r = &raw_resid / c;
        let fs = fp / c;

        let dim = x.ncols();
        let init = GpHyperparams::initial(s, dim, cfg.initial_noise_std);
        let params = if n == 0 {
            init
        } else {
            let (xo, ro, fo) = hyperopt_subset(&xs, &r, &fs, cfg);
            let objective = |theta: &[f64]| -> Result<(f64, Vec<f64>)> {
                let hp = GpHyperparams::from_flat(s, dim, theta);
                let (k, dk) = covariance(&xo, &fo, &hp, true)?;
                let (v, g, _) = nlml_with_gradient(&ro, &k, &dk, &[])?;
                Ok((v, g))
            };
            let best = optimize_hyperparams(objective, &init.to_flat(), &cfg.optimizer)
                .map_err(|e| e.context(format!("fitting {kind}")))?;
            GpHyperparams::from_flat(s, dim, &best.params)
        };

        let mut model = Self {
            kind,
            scaling,
            output_scale: c,
            x: x.clone(),
            y: y.clone(),
            fp: fp.clone(),
            params,
            nlml: f64::NAN,
            posterior: None,
        };
        model.refresh()?;
        Ok(model)
    }

    /// Length of the flattened log-hyperparameter vector
    /// `[rho lengthscales, rho variance, delta lengthscales, delta variance, noise]`
    /// (absent channels omitted).
    pub fn n_hyperparams(kind: ModelKind, dim: usize) -> Result<usize> {
        Ok(GpHyperparams::initial(Structure::of(kind)?, dim, 1.0).to_flat().len())
    }

    /// The training objective: NLML of residuals `r` under `K(theta)` and its
    /// analytic gradient. Inputs are used as given, without standardization.
    pub fn objective(
        kind: ModelKind,
        x: &DMatrix<f64>,
        r: &DVector<f64>,
        fp: &DVector<f64>,
        theta: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        let s = Structure::of(kind)?;
        if theta.len() != Self::n_hyperparams(kind, x.ncols())? {
            return Err(Error::invalid(format!("{kind} expects {} hyperparameters", Self::n_hyperparams(kind, x.ncols())?)));
        }
        if r.len() != x.nrows() || fp.len() != x.nrows() {
            return Err(Error::invalid("inputs, residuals and physics values must have the same length"));
        }
        let hp = GpHyperparams::from_flat(s, x.ncols(), theta);
        let (k, dk) = covariance(x, fp, &hp, true)?;
        let (v, g, _) = nlml_with_gradient(r, &k, &dk, &[])?;
        Ok((v, g))
    }

    /// Rebuilds the cached factorization from the stored data and hyperparameters.
    pub(crate) fn refresh(&mut self) -> Result<()> {
        let s = Structure::of(self.kind)?;
        let xs = self.scaling.apply(&self.x);
        let c = self.output_scale;
        let mean: DVector<f64> = if s.physics_mean { self.fp.clone() } else { DVector::zeros(self.y.len()) };
        let r = (&self.y - &mean) / c;
        let fs = &self.fp / c;
        let (k, _) = covariance(&xs, &fs, &self.params, false)?;
        let factor = factorize(&k)?;
        let alpha = factor.solve_vec(&r);
        self.nlml = 0.5 * r.dot(&alpha) + 0.5 * factor.log_det() + 0.5 * r.len() as f64 * (2.0 * std::f64::consts::PI).ln();
        self.posterior = Some(Posterior { xs, fs, factor, alpha });
        Ok(())
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn input_scaling(&self) -> &InputScaling {
        &self.scaling
    }

    pub fn hyperparams(&self) -> &GpHyperparams {
        &self.params
    }

    pub fn n_train(&self) -> usize {
        self.x.nrows()
    }

    /// Dimension of the factored covariance matrix.
    pub fn factor_dim(&self) -> usize {
        self.posterior.as_ref().map_or(0, |p| p.factor.dim())
    }

    /// NLML of the standardized residuals at the fitted hyperparameters.
    pub fn nlml(&self) -> f64 {
        self.nlml
    }

    pub fn input_dim(&self) -> usize {
        self.x.ncols()
    }

    /// Observation noise variance in original output units.
    pub fn noise_variance(&self) -> f64 {
        self.params.noise.variance() * self.output_scale * self.output_scale
    }

    /// Prior variance of the latent function at an input where the physics
    /// model evaluates to `fp`, in original units.
    pub fn prior_variance(&self, fp: f64) -> f64 {
        let c = self.output_scale;
        self.params.prior_variance(fp / c) * c * c
    }

    /// Mean and latent (noise-free) variance.
    pub fn predict_latent(&self, x: &DMatrix<f64>, fp: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let post = self
            .posterior
            .as_ref()
            .ok_or_else(|| Error::State("model has no cached posterior; call refresh".into()))?;
        if x.ncols() != self.input_dim() {
            return Err(Error::invalid(format!("expected {} input columns, got {}", self.input_dim(), x.ncols())));
        }
        if fp.len() != x.nrows() {
            return Err(Error::invalid("one physics value per query row is required"));
        }
        let s = Structure::of(self.kind)?;
        let c = self.output_scale;
        let xq = self.scaling.apply(x);
        let fq = fp / c;
        let n = post.xs.nrows();
        let m = xq.nrows();

        let mut q = DMatrix::zeros(n, m);
        if let Some(p) = &self.params.rho {
            let k = rbf_kernel(&post.xs, &xq, p)?;
            for j in 0..m {
                for i in 0..n {
                    q[(i, j)] += post.fs[i] * k[(i, j)] * fq[j];
                }
            }
        }
        if let Some(p) = &self.params.delta {
            q += rbf_kernel(&post.xs, &xq, p)?;
        }

        let correction = q.tr_mul(&post.alpha);
        let v = post.factor.solve_lower(&q);
        let mut mean = DVector::zeros(m);
        let mut var = DVector::zeros(m);
        for j in 0..m {
            let prior_mean = if s.physics_mean { fp[j] } else { 0.0 };
            mean[j] = prior_mean + c * correction[j];
            let explained = v.column(j).norm_squared();
            var[j] = c * c * (self.params.prior_variance(fq[j]) - explained).max(0.0);
        }
        Ok((mean, var))
    }

    pub fn predict(&self, x: &DMatrix<f64>, fp: &DVector<f64>) -> Result<PredictiveDistribution> {
        let (mean, latent) = self.predict_latent(x, fp)?;
        let noise = self.noise_variance();
        Ok(PredictiveDistribution::single(mean, latent.add_scalar(noise)))
    }
}

/// Restricts hyperparameter optimization to a seeded random subset when the
/// training set exceeds `cfg.max_hyperopt_points`.
fn hyperopt_subset(
    xs: &DMatrix<f64>,
    r: &DVector<f64>,
    fs: &DVector<f64>,
    cfg: &FitConfig,
) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
    let n = xs.nrows();
    match cfg.max_hyperopt_points {
        Some(limit) if n > limit => {
            let mut r_ = rng::seeded(rng::derive_seed(cfg.optimizer.seed, &[0x5ab5e7]));
            let mut idx = rand::seq::index::sample(&mut r_, n, limit).into_vec();
            idx.sort_unstable();
            (
                xs.select_rows(idx.iter()),
                DVector::from_iterator(limit, idx.iter().map(|&i| r[i])),
                DVector::from_iterator(limit, idx.iter().map(|&i| fs[i])),
            )
        }
        _ => (xs.clone(), r.clone(), fs.clone()),
    }
}
