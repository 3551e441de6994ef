use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// First jitter tried, relative to the mean of the diagonal.
pub const JITTER_START_REL: f64 = 1e-8;
/// Largest jitter tried before giving up, relative to the mean of the diagonal.
pub const JITTER_MAX_REL: f64 = 1e-2;

/// Lower-triangular factor `L` with `L L^T = A + jitter I`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    chol: Cholesky<f64, Dyn>,
    jitter_used: f64,
}

impl CholeskyFactor {
    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// `L^{-1} b`.
    pub fn solve_lower(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = b.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut out);
        out
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// `log |A + jitter I|`.
    pub fn log_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
    }
}

/// Factorizes a symmetric matrix, escalating diagonal jitter by factors of ten
/// from `1e-8` to `1e-2` times the mean diagonal until it succeeds.
pub fn factorize(a: &DMatrix<f64>) -> Result<CholeskyFactor> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::invalid(format!("expected a square matrix, got {}x{}", n, a.ncols())));
    }
    if n == 0 {
        let chol = Cholesky::new(DMatrix::zeros(0, 0)).expect("empty factorization");
        return Ok(CholeskyFactor { chol, jitter_used: 0.0 });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite { jitter: 0.0 });
    }
    let mean_diag = a.diagonal().mean();
    if !(mean_diag > 0.0) {
        return Err(Error::NotPositiveDefinite { jitter: 0.0 });
    }
    let mut rel = JITTER_START_REL;
    loop {
        let jitter = rel * mean_diag;
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(shifted) {
            let l = chol.l_dirty();
            if (0..n).all(|i| l[(i, i)] > 0.0 && l[(i, i)].is_finite()) {
                return Ok(CholeskyFactor { chol, jitter_used: jitter });
            }
        }
        if rel >= JITTER_MAX_REL * (1.0 - 1e-12) {
            return Err(Error::NotPositiveDefinite { jitter });
        }
        rel *= 10.0;
    }
}

/// For matrices that are positive definite by construction (a ridge Gram
/// matrix `A^T A + lambda I`): factorizes `a` exactly, falling back to
/// [`factorize`]'s jitter schedule only if that fails.
pub fn factorize_regularized(a: &DMatrix<f64>) -> Result<CholeskyFactor> {
    if a.is_square() && a.nrows() > 0 && a.iter().all(|v| v.is_finite()) {
        if let Some(chol) = Cholesky::new(a.clone()) {
            let l = chol.l_dirty();
            if (0..l.nrows()).all(|i| l[(i, i)] > 0.0 && l[(i, i)].is_finite()) {
                return Ok(CholeskyFactor { chol, jitter_used: 0.0 });
            }
        }
    }
    factorize(a)
}

/// Solves `(A + jitter I) X = B` and returns the factor that was used.
pub fn cholesky_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(DMatrix<f64>, CholeskyFactor)> {
    if b.nrows() != a.nrows() {
        return Err(Error::invalid(format!(
            "right-hand side has {} rows, matrix has {}",
            b.nrows(),
            a.nrows()
        )));
    }
    let factor = factorize(a)?;
    Ok((factor.solve(b), factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Gauss-Jordan inverse with partial pivoting, independent of any
    /// factorization used by the library.
    fn gauss_jordan_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let mut m = a.clone();
        let mut inv = DMatrix::<f64>::identity(n, n);
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs())).unwrap();
            m.swap_rows(col, piv);
            inv.swap_rows(col, piv);
            let p = m[(col, col)];
            for j in 0..n {
                m[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for i in 0..n {
                if i != col {
                    let f = m[(i, col)];
                    for j in 0..n {
                        m[(i, j)] -= f * m[(col, j)];
                        inv[(i, j)] -= f * inv[(col, j)];
                    }
                }
            }
        }
        inv
    }

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = crate::rng::seeded(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        m.transpose() * &m + DMatrix::identity(n, n)
    }

    #[test]
    fn identity_system() {
        let b = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 3.0]);
        let (x, f) = cholesky_solve(&DMatrix::identity(3, 3), &b).unwrap();
        assert!((x - &b).abs().max() < 1e-7);
        assert_eq!(f.jitter_used(), JITTER_START_REL);
    }

    #[test]
    fn regularized_factor_skips_jitter() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let f = factorize_regularized(&a).unwrap();
        assert_eq!(f.jitter_used(), 0.0);
        assert!((f.lower() * f.lower().transpose() - &a).norm() < 1e-14);
        // rank-deficient input still goes through the jitter schedule
        let f = factorize_regularized(&DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert!(f.jitter_used() > 0.0);
    }

    #[test]
    fn diagonal_system() {
        let a = DMatrix::from_diagonal_element(2, 2, 2.0);
        let b = DMatrix::from_element(2, 1, 1.0);
        let (x, _) = cholesky_solve(&a, &b).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-8 && (x[(1, 0)] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn matches_explicit_inverse() {
        let a = random_spd(5, 11);
        let mut rng = crate::rng::seeded(12);
        let b = DMatrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0));
        let (x, f) = cholesky_solve(&a, &b).unwrap();
        let mut shifted = a.clone();
        for i in 0..5 {
            shifted[(i, i)] += f.jitter_used();
        }
        let oracle = gauss_jordan_inverse(&shifted) * &b;
        assert!((x - oracle).abs().max() < 1e-8);
    }

    #[test]
    fn reconstruction_and_positive_diagonal() {
        let a = random_spd(12, 3);
        let f = factorize(&a).unwrap();
        let l = f.lower();
        let mut target = a.clone();
        for i in 0..12 {
            target[(i, i)] += f.jitter_used();
            assert!(l[(i, i)] > 0.0);
        }
        assert!((&l * l.transpose() - &target).norm() / target.norm() < 1e-8);
    }

    #[test]
    fn singular_psd_matrix_recovers_with_jitter() {
        let v = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let a = &v * v.transpose();
        let f = factorize(&a).unwrap();
        assert!(f.jitter_used() > 0.0);
    }

    #[test]
    fn indefinite_matrix_fails_with_max_jitter() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]);
        match factorize(&a) {
            Err(Error::NotPositiveDefinite { jitter }) => assert!(jitter > 0.0),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn residual_small_for_random_spd(n in 1usize..200, seed in any::<u64>()) {
            let a = random_spd(n, seed);
            let mut rng = crate::rng::seeded(seed ^ 1);
            let b = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
            let (x, f) = cholesky_solve(&a, &b).unwrap();
            let mut shifted = a.clone();
            for i in 0..n { shifted[(i, i)] += f.jitter_used(); }
            let resid = (&shifted * &x - &b).norm() / b.norm();
            prop_assert!(resid < 1e-8);
        }
    }
}
