use super::{check_input, PhysicsModel};
use crate::error::Result;

/// `1/4 (6x - 2)^2 sin(12x - 4)`
pub fn forrester_true(x: f64) -> f64 {
    0.25 * (6.0 * x - 2.0).powi(2) * (12.0 * x - 4.0).sin()
}

/// `1/4 (f_true(x) / 2 + 10 (x - 1/2) + 5)`
pub fn forrester_crude(x: f64) -> f64 {
    0.25 * (forrester_true(x) / 2.0 + 10.0 * (x - 0.5) + 5.0)
}

/// The crude Forrester function as a one-input, one-output physics model.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForresterCrude;

impl PhysicsModel for ForresterCrude {
    fn input_dim(&self) -> usize {
        1
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(self, x)?;
        Ok(vec![forrester_crude(x[0])])
    }
}
