use nalgebra::{DMatrix, DVector};

use super::cholesky::{factorize, CholeskyFactor};
use crate::error::{Error, Result};

const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_8;

fn check(r: &DVector<f64>, k: &DMatrix<f64>) -> Result<()> {
    if k.nrows() != r.len() || k.ncols() != r.len() {
        return Err(Error::invalid(format!(
            "residual length {} does not match covariance {}x{}",
            r.len(),
            k.nrows(),
            k.ncols()
        )));
    }
    Ok(())
}

fn nlml_from_factor(r: &DVector<f64>, factor: &CholeskyFactor) -> (f64, DVector<f64>) {
    let alpha = factor.solve_vec(r);
    let value = 0.5 * r.dot(&alpha) + 0.5 * factor.log_det() + r.len() as f64 * HALF_LOG_2PI;
    (value, alpha)
}

/// Negative log marginal likelihood `1/2 r^T K^-1 r + 1/2 log|K| + N/2 log 2 pi`.
pub fn nlml(r: &DVector<f64>, k: &DMatrix<f64>) -> Result<f64> {
    check(r, k)?;
    let factor = factorize(k)?;
    Ok(nlml_from_factor(r, &factor).0)
}

/// Gradient of [`nlml`] given the derivative of `K` with respect to each parameter.
///
/// Uses `d NLML / d theta = 1/2 tr((K^-1 - a a^T) dK/dtheta)` with `a = K^-1 r`.
pub fn nlml_gradient(r: &DVector<f64>, k: &DMatrix<f64>, dk: &[DMatrix<f64>]) -> Result<Vec<f64>> {
    Ok(nlml_with_gradient(r, k, dk, &[])?.1)
}

/// Value and gradient in one factorization.
///
/// `dr` holds derivatives of the residual vector for parameters that shift the
/// mean rather than the covariance; they are appended after the `dk` entries.
pub fn nlml_with_gradient(
    r: &DVector<f64>,
    k: &DMatrix<f64>,
    dk: &[DMatrix<f64>],
    dr: &[DVector<f64>],
) -> Result<(f64, Vec<f64>, CholeskyFactor)> {
    check(r, k)?;
    let factor = factorize(k)?;
    let (value, alpha) = nlml_from_factor(r, &factor);
    let n = r.len();
    let mut w = factor.inverse();
    for j in 0..n {
        for i in 0..n {
            w[(i, j)] -= alpha[i] * alpha[j];
        }
    }
    let mut grad = Vec::with_capacity(dk.len() + dr.len());
    for d in dk {
        if d.nrows() != n || d.ncols() != n {
            return Err(Error::invalid("covariance derivative has wrong shape"));
        }
        // tr(W D) for symmetric W
        grad.push(0.5 * w.component_mul(d).sum());
    }
    for d in dr {
        grad.push(alpha.dot(d));
    }
    Ok((value, grad, factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{rbf_kernel_with_grads, KernelParams};
    use rand::Rng;

    fn k1(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_values() {
        let v0 = nlml(&DVector::from_element(1, 0.0), &k1(1.0)).unwrap();
        assert!((v0 - 0.918_94).abs() < 1e-5);
        let v1 = nlml(&DVector::from_element(1, 1.0), &k1(1.0)).unwrap();
        assert!((v1 - 1.418_94).abs() < 1e-5);
        let v2 = nlml(&DVector::zeros(2), &DMatrix::identity(2, 2)).unwrap();
        assert!((v2 - 1.837_88).abs() < 1e-5);
    }

    #[test]
    fn noise_gradient_on_isotropic_covariance_equals_n() {
        let n = 7;
        let sigma2: f64 = 0.3;
        let k = DMatrix::from_diagonal_element(n, n, sigma2);
        let dk = DMatrix::from_diagonal_element(n, n, 2.0 * sigma2);
        let g = nlml_gradient(&DVector::zeros(n), &k, &[dk]).unwrap();
        assert!((g[0] - n as f64).abs() < 1e-6);
    }

    #[test]
    fn unused_dimension_has_zero_gradient() {
        let mut rng = crate::rng::seeded(5);
        // second column constant, so its lengthscale never enters K
        let x = DMatrix::from_fn(6, 2, |_, c| if c == 0 { rng.random_range(-1.0..1.0) } else { 0.5 });
        let (mut k, grads) = rbf_kernel_with_grads(&x, &KernelParams::unit(2)).unwrap();
        for i in 0..6 {
            k[(i, i)] += 0.01;
        }
        let r = DVector::from_fn(6, |i, _| i as f64 * 0.1);
        let g = nlml_gradient(&r, &k, &grads).unwrap();
        assert_eq!(g[1], 0.0);
        assert!(g[0] != 0.0);
    }

    #[test]
    fn mean_shift_gradient_matches_finite_difference() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let m = DVector::from_column_slice(&[0.5, -1.0]);
        let y = DVector::from_column_slice(&[1.0, 2.0]);
        let rho = 0.7;
        let r = &y - &m * rho;
        let dr = -&m;
        let (_, g, _) = nlml_with_gradient(&r, &k, &[], &[dr]).unwrap();
        let h = 1e-6;
        let fd = (nlml(&(&y - &m * (rho + h)), &k).unwrap() - nlml(&(&y - &m * (rho - h)), &k).unwrap()) / (2.0 * h);
        assert!((g[0] - fd).abs() < 1e-7);
    }
}
