//! Model-based reinforcement learning on the cart-pole swing-up: cost,
//! replay buffers, particle rollouts through a learned dynamics model, a
//! compact soft actor-critic and the Dyna training loop.

mod buffers;
mod dyna;
mod episode;
pub mod nn;
mod sac;

use serde::{Deserialize, Serialize};

pub use buffers::{ReplayBuffers, MODEL_TO_REAL_RATIO};
pub use dyna::{run_dyna_scenario, run_dyna_scenario_logged, DynaConfig, Scenario, ScenarioRun, TrialRecord};
pub use episode::{
    pendulum_cost, run_model_episode, run_real_episode, ConstantPolicy, Episode, EpisodeSpec, PendulumEnv, Policy,
};
pub use sac::{Observation, SacAgent, SacConfig, UpdateStats};

use crate::error::{Error, Result};

/// One step of experience.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub cost: f64,
    pub next_state: Vec<f64>,
    pub model_generated: bool,
}

impl Transition {
    pub fn validate(&self) -> Result<()> {
        if self.state.len() != self.next_state.len() {
            return Err(Error::invalid("state and next state differ in length"));
        }
        let finite = self.cost.is_finite()
            && self.state.iter().chain(&self.action).chain(&self.next_state).all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("transition contains non-finite values"));
        }
        Ok(())
    }
}
