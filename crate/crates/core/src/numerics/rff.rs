use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Random Fourier feature map approximating an RBF kernel with unit signal
/// variance and a shared lengthscale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RffMap {
    /// `D x d` spectral frequencies, rows drawn from `N(0, I / l^2)`.
    pub omega: DMatrix<f64>,
    /// Phase offsets in `[0, 2 pi)`.
    pub phase: DVector<f64>,
    pub lengthscale: f64,
}

impl RffMap {
    pub fn n_features(&self) -> usize {
        self.omega.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.omega.ncols()
    }
}

pub fn make_rff_map(input_dim: usize, n_features: usize, lengthscale: f64, seed: u64) -> Result<RffMap> {
    if n_features == 0 {
        return Err(Error::invalid("random feature count must be at least 1"));
    }
    if !(lengthscale > 0.0 && lengthscale.is_finite()) {
        return Err(Error::invalid(format!("lengthscale must be positive, got {lengthscale}")));
    }
    let mut rng = rng::seeded(seed);
    let mut omega = DMatrix::zeros(n_features, input_dim);
    let mut phase = DVector::zeros(n_features);
    for j in 0..n_features {
        for k in 0..input_dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            omega[(j, k)] = z / lengthscale;
        }
        phase[j] = rng.random_range(0.0..2.0 * PI);
    }
    Ok(RffMap { omega, phase, lengthscale })
}

/// Feature matrix with entries `sqrt(2/D) cos(-omega_j . x_i + b_j)`.
pub fn rff_features(map: &RffMap, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != map.input_dim() {
        return Err(Error::invalid(format!(
            "feature map expects {} input columns, got {}",
            map.input_dim(),
            x.ncols()
        )));
    }
    let scale = (2.0 / map.n_features() as f64).sqrt();
    let proj = x * map.omega.transpose();
    Ok(DMatrix::from_fn(x.nrows(), map.n_features(), |i, j| {
        scale * (map.phase[j] - proj[(i, j)]).cos()
    }))
}
