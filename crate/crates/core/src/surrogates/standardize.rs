use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

const MIN_SCALE: f64 = 1e-8;

/// Per-column affine input scaling computed at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl InputScaling {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Column means and population standard deviations. Columns that are
    /// (numerically) constant keep unit scale, so queries off the constant
    /// value are not pushed infinitely far away.
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows();
        if n == 0 {
            return Self::identity(x.ncols());
        }
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for c in 0..x.ncols() {
            let col = x.column(c);
            let m = col.mean();
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            let s = var.sqrt();
            mean.push(m);
            scale.push(if s < MIN_SCALE { 1.0 } else { s });
        }
        Self { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.mean[j]) / self.scale[j])
    }
}

/// Root-mean-square of a residual vector, floored at `1e-8`; `1` when empty.
pub fn residual_scale(r: &[f64]) -> f64 {
    if r.is_empty() {
        return 1.0;
    }
    let rms = (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt();
    rms.max(MIN_SCALE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizes_columns() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let s = InputScaling::fit(&x);
        let z = s.apply(&x);
        assert!((z.column(0).mean()).abs() < 1e-15);
        assert!((z.column(0).norm_squared() / 3.0 - 1.0).abs() < 1e-12);
        // constant column keeps unit scale
        assert_eq!(s.scale[1], 1.0);
        assert_eq!(z[(0, 1)], 0.0);
    }

    #[test]
    fn residual_scale_edge_cases() {
        assert_eq!(residual_scale(&[]), 1.0);
        assert_eq!(residual_scale(&[0.0, 0.0]), 1e-8);
        assert!((residual_scale(&[3.0, -4.0]) - (12.5f64).sqrt()).abs() < 1e-15);
    }
}
