use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ARD squared-exponential kernel hyperparameters, stored in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub log_lengthscales: Vec<f64>,
    pub log_signal_variance: f64,
}

impl KernelParams {
    /// Unit lengthscales and unit signal variance.
    pub fn unit(dim: usize) -> Self {
        Self {
            log_lengthscales: vec![0.0; dim],
            log_signal_variance: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.log_lengthscales.len()
    }

    pub fn lengthscales(&self) -> Vec<f64> {
        self.log_lengthscales.iter().map(|l| l.exp()).collect()
    }

    pub fn signal_variance(&self) -> f64 {
        self.log_signal_variance.exp()
    }

    /// Number of scalars in the flattened representation.
    pub fn n_params(&self) -> usize {
        self.dim() + 1
    }

    /// Appends `[log_lengthscales.., log_signal_variance]` to `out`.
    pub fn write_flat(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.log_lengthscales);
        out.push(self.log_signal_variance);
    }

    /// Reads back what [`Self::write_flat`] produced; returns the remaining slice.
    pub fn read_flat(dim: usize, flat: &[f64]) -> (Self, &[f64]) {
        let (head, rest) = flat.split_at(dim + 1);
        (
            Self {
                log_lengthscales: head[..dim].to_vec(),
                log_signal_variance: head[dim],
            },
            rest,
        )
    }
}

/// Gaussian observation noise, stored as a log standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParam {
    pub log_noise_std: f64,
}

impl NoiseParam {
    pub fn new(noise_std: f64) -> Self {
        Self {
            log_noise_std: noise_std.ln(),
        }
    }

    pub fn variance(&self) -> f64 {
        (2.0 * self.log_noise_std).exp()
    }
}

impl Default for NoiseParam {
    fn default() -> Self {
        Self::new(0.1)
    }
}

fn check_dims(x1: &DMatrix<f64>, x2: &DMatrix<f64>, params: &KernelParams) -> Result<()> {
    let d = params.dim();
    if x1.ncols() != d || x2.ncols() != d {
        return Err(Error::invalid(format!(
            "kernel expects {d} input columns, got {} and {}",
            x1.ncols(),
            x2.ncols()
        )));
    }
    Ok(())
}

/// `k(x, x') = s^2 exp(-1/2 sum_k ((x_k - x'_k) / l_k)^2)` for every row pair.
pub fn rbf_kernel(x1: &DMatrix<f64>, x2: &DMatrix<f64>, params: &KernelParams) -> Result<DMatrix<f64>> {
    check_dims(x1, x2, params)?;
    let inv_ls: Vec<f64> = params.log_lengthscales.iter().map(|l| (-l).exp()).collect();
    let s2 = params.signal_variance();
    let mut k = DMatrix::zeros(x1.nrows(), x2.nrows());
    for j in 0..x2.nrows() {
        for i in 0..x1.nrows() {
            let mut r2 = 0.0;
            for (c, il) in inv_ls.iter().enumerate() {
                let diff = (x1[(i, c)] - x2[(j, c)]) * il;
                r2 += diff * diff;
            }
            k[(i, j)] = s2 * (-0.5 * r2).exp();
        }
    }
    Ok(k)
}

/// Kernel matrix of `x` with itself plus its derivatives with respect to each
/// log-lengthscale followed by the log signal variance.
pub fn rbf_kernel_with_grads(x: &DMatrix<f64>, params: &KernelParams) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
    let k = rbf_kernel(x, x, params)?;
    let n = x.nrows();
    let mut grads = Vec::with_capacity(params.n_params());
    for (c, l) in params.log_lengthscales.iter().enumerate() {
        let inv_l2 = (-2.0 * l).exp();
        let mut g = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                let diff = x[(i, c)] - x[(j, c)];
                g[(i, j)] = k[(i, j)] * diff * diff * inv_l2;
            }
        }
        grads.push(g);
    }
    grads.push(k.clone());
    Ok((k, grads))
}
