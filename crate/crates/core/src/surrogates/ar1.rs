//! Recursive AR1 co-kriging: `f_2(x) = rho f_1(x) + delta(x)` with a constant
//! `rho`, a zero-mean GP `f_1` trained on points generated from the physics
//! model, and a GP `delta` on the high-fidelity residuals.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::gp::AdjustedGp;
use super::standardize::{residual_scale, InputScaling};
use super::{FitConfig, ModelKind, PredictiveDistribution, ScalarPhysics};
use crate::error::{Error, Result};
use crate::numerics::{
    factorize, nlml_with_gradient, optimize_hyperparams, rbf_kernel, rbf_kernel_with_grads, CholeskyFactor,
    KernelParams, NoiseParam,
};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ar1Config {
    /// Number of physics-generated low-fidelity points.
    pub low_fidelity_points: usize,
    /// Box the low-fidelity points cover, one `(lo, hi)` per input dimension.
    /// Falls back to the bounding box of the observations when empty.
    pub low_fidelity_box: Vec<(f64, f64)>,
}

impl Default for Ar1Config {
    fn default() -> Self {
        Self {
            low_fidelity_points: 40,
            low_fidelity_box: Vec::new(),
        }
    }
}

/// Evenly spaced points for one input dimension, seeded uniform draws otherwise.
fn low_fidelity_design(n: usize, bounds: &[(f64, f64)], seed: u64) -> DMatrix<f64> {
    let d = bounds.len();
    if d == 1 {
        let (lo, hi) = bounds[0];
        let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
        return DMatrix::from_fn(n, 1, |i, _| lo + step * i as f64);
    }
    let mut r = rng::seeded(seed);
    DMatrix::from_fn(n, d, |_, j| {
        let (lo, hi) = bounds[j];
        if hi > lo { r.random_range(lo..hi) } else { lo }
    })
}

#[derive(Debug, Clone)]
struct Stage2Cache {
    xs: DMatrix<f64>,
    factor: CholeskyFactor,
    alpha: DVector<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ar1Model {
    low: AdjustedGp,
    rho: f64,
    delta: KernelParams,
    noise: NoiseParam,
    scaling: InputScaling,
    output_scale: f64,
    x: DMatrix<f64>,
    y: DVector<f64>,
    /// Low-fidelity posterior mean at the training inputs.
    low_mean_at_train: DVector<f64>,
    nlml: f64,
    #[serde(skip)]
    cache: Option<Stage2Cache>,
}

fn stage2_matrices(
    xs: &DMatrix<f64>,
    delta: &KernelParams,
    noise: &NoiseParam,
    with_grads: bool,
) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
    let n = xs.nrows();
    let s2 = noise.variance();
    let (mut k, mut grads) = if with_grads {
        rbf_kernel_with_grads(xs, delta)?
    } else {
        (rbf_kernel(xs, xs, delta)?, Vec::new())
    };
    for i in 0..n {
        k[(i, i)] += s2;
    }
    if with_grads {
        grads.push(DMatrix::from_diagonal_element(n, n, 2.0 * s2));
    }
    Ok((k, grads))
}

impl Ar1Model {
    pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>, physics: ScalarPhysics<'_>, cfg: &FitConfig) -> Result<Self> {
        let n = x.nrows();
        let d = x.ncols();
        if cfg.ar1.low_fidelity_points == 0 {
            return Err(Error::Config("AR1 needs at least one low-fidelity point".into()));
        }
        if n == 0 {
            return Err(Error::invalid("ar1 needs at least one observation"));
        }
        if y.len() != n {
            return Err(Error::invalid("inputs and targets must have the same length"));
        }
        let bounds: Vec<(f64, f64)> = if cfg.ar1.low_fidelity_box.is_empty() {
            (0..d)
                .map(|j| {
                    let c = x.column(j);
                    (c.min(), c.max())
                })
                .collect()
        } else if cfg.ar1.low_fidelity_box.len() == d {
            cfg.ar1.low_fidelity_box.clone()
        } else {
            return Err(Error::Config(format!("AR1 low-fidelity box has {} dims, data has {d}", cfg.ar1.low_fidelity_box.len())));
        };
        let x1 = low_fidelity_design(cfg.ar1.low_fidelity_points, &bounds, rng::derive_seed(cfg.optimizer.seed, &[1]));
        let y1 = physics.evaluate_rows(&x1)?;
        let low = AdjustedGp::fit(ModelKind::ZeroMeanGp, &x1, &y1, &y1, cfg).map_err(|e| e.context("AR1 low-fidelity GP"))?;
        let (mu1, _) = low.predict_latent(x, &DVector::zeros(n))?;

        let scaling = InputScaling::fit(x);
        let xs = scaling.apply(x);
        let c = residual_scale((y - &mu1).as_slice());
        let ys = y / c;
        let ms = &mu1 / c;

        // theta = [delta log-lengthscales.., delta log-variance, log noise, rho]
        let mut init = Vec::new();
        KernelParams::unit(d).write_flat(&mut init);
        init.push(cfg.initial_noise_std.ln());
        init.push(1.0);
        let unpack = |theta: &[f64]| {
            let (delta, rest) = KernelParams::read_flat(d, theta);
            (delta, NoiseParam { log_noise_std: rest[0] }, rest[1])
        };
        let objective = |theta: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (delta, noise, rho) = unpack(theta);
            let (k, dk) = stage2_matrices(&xs, &delta, &noise, true)?;
            let r = &ys - &ms * rho;
            let dr = -&ms;
            let (v, g, _) = nlml_with_gradient(&r, &k, &dk, &[dr])?;
            Ok((v, g))
        };
        let best = optimize_hyperparams(objective, &init, &cfg.optimizer).map_err(|e| e.context("fitting ar1"))?;
        let (delta, noise, rho) = unpack(&best.params);

        let mut model = Self {
            low,
            rho,
            delta,
            noise,
            scaling,
            output_scale: c,
            x: x.clone(),
            y: y.clone(),
            low_mean_at_train: mu1,
            nlml: f64::NAN,
            cache: None,
        };
        model.refresh()?;
        Ok(model)
    }

    pub(crate) fn refresh(&mut self) -> Result<()> {
        self.low.refresh()?;
        let xs = self.scaling.apply(&self.x);
        let (k, _) = stage2_matrices(&xs, &self.delta, &self.noise, false)?;
        let factor = factorize(&k)?;
        let r = (&self.y - &self.low_mean_at_train * self.rho) / self.output_scale;
        let alpha = factor.solve_vec(&r);
        self.nlml = 0.5 * r.dot(&alpha) + 0.5 * factor.log_det() + 0.5 * r.len() as f64 * (2.0 * std::f64::consts::PI).ln();
        self.cache = Some(Stage2Cache { xs, factor, alpha });
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn low_fidelity(&self) -> &AdjustedGp {
        &self.low
    }

    pub fn nlml(&self) -> f64 {
        self.nlml
    }

    /// Size of the system this recursive form factors: the low-fidelity GP
    /// plus the residual GP.
    pub fn input_dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn total_points(&self) -> usize {
        self.low.n_train() + self.x.nrows()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<PredictiveDistribution> {
        let cache = self.cache.as_ref().ok_or_else(|| Error::State("AR1 model has no cached posterior".into()))?;
        let m = x.nrows();
        let (mu1, var1) = self.low.predict_latent(x, &DVector::zeros(m))?;
        let xq = self.scaling.apply(x);
        let q = rbf_kernel(&cache.xs, &xq, &self.delta)?;
        let corr = q.tr_mul(&cache.alpha);
        let v = cache.factor.solve_lower(&q);
        let c2 = self.output_scale * self.output_scale;
        let s2 = self.delta.signal_variance();
        let noise = self.noise.variance();
        let mean = DVector::from_fn(m, |j, _| self.rho * mu1[j] + self.output_scale * corr[j]);
        let var = DVector::from_fn(m, |j, _| {
            self.rho * self.rho * var1[j] + c2 * ((s2 - v.column(j).norm_squared()).max(0.0) + noise)
        });
        Ok(PredictiveDistribution::single(mean, var))
    }
}
