//! Crude physics-derived models `f_p`.
//!
//! A [`PhysicsModel`] is any deterministic map from an input vector (a scalar
//! for the Forrester task, state followed by action for dynamics) to an output
//! vector. It does not need to be differentiable.

mod forrester;
mod ode;
mod pendulum;

use std::fmt::Debug;

pub use forrester::{forrester_crude, forrester_true, ForresterCrude};
pub use ode::{integrate_step, OdeStepConfig, OdeSystem};
pub use pendulum::{
    make_perturbed_pendulum, pendulum_energy, pendulum_ode, DomainBox, PendulumModel, PendulumOde, PendulumParams,
    PENDULUM_ACTION_DIM, PENDULUM_STATE_DIM,
};

use crate::error::Result;

pub trait PhysicsModel: Send + Sync + Debug {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// Predicts that the state does not change: the first `output_dim` inputs are
/// returned unchanged.
///
/// Used as the mean of a purely data-driven dynamics model, which then learns
/// state differences.
#[derive(Debug, Clone)]
pub struct Persistence {
    pub input_dim: usize,
    pub output_dim: usize,
}

impl PhysicsModel for Persistence {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(self, x)?;
        Ok(x[..self.output_dim].to_vec())
    }
}

pub(crate) fn check_input(model: &dyn PhysicsModel, x: &[f64]) -> Result<()> {
    if x.len() != model.input_dim() {
        return Err(crate::Error::invalid(format!(
            "physics model expects {} inputs, got {}",
            model.input_dim(),
            x.len()
        )));
    }
    Ok(())
}
