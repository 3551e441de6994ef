use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A first-order system `ds/dt = f(s, a)` with the action held constant.
pub trait OdeSystem {
    fn state_dim(&self) -> usize;
    fn derivative(&self, state: &[f64], action: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeStepConfig {
    /// Length of one environment step in seconds.
    pub step_size: f64,
    /// Equal RK4 sub-intervals per step.
    pub substeps: usize,
}

impl Default for OdeStepConfig {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            substeps: 8,
        }
    }
}

impl OdeStepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) || self.substeps == 0 {
            return Err(Error::Config(format!(
                "ODE step needs step_size > 0 and substeps >= 1, got {} / {}",
                self.step_size, self.substeps
            )));
        }
        Ok(())
    }
}

/// Advances `state` by one step of classical RK4 over `substeps` sub-intervals.
pub fn integrate_step<S: OdeSystem + ?Sized>(
    system: &S,
    state: &[f64],
    action: &[f64],
    config: &OdeStepConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    let n = system.state_dim();
    if state.len() != n {
        return Err(Error::invalid(format!("ODE state has {} entries, expected {n}", state.len())));
    }
    let h = config.step_size / config.substeps as f64;
    let mut s = state.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    for sub in 0..config.substeps {
        system.derivative(&s, action, &mut k1);
        for i in 0..n {
            tmp[i] = s[i] + 0.5 * h * k1[i];
        }
        system.derivative(&tmp, action, &mut k2);
        for i in 0..n {
            tmp[i] = s[i] + 0.5 * h * k2[i];
        }
        system.derivative(&tmp, action, &mut k3);
        for i in 0..n {
            tmp[i] = s[i] + h * k3[i];
        }
        system.derivative(&tmp, action, &mut k4);
        for i in 0..n {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { substep: sub });
        }
    }
    Ok(s)
}
