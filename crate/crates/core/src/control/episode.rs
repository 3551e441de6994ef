use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{SacAgent, Transition};
use crate::error::{Error, Result};
use crate::physics::{DomainBox, OdeStepConfig, PendulumModel, PendulumParams};
use crate::rng::Rng;
use crate::surrogates::DynamicsModel;

/// `1 - exp(-2 d^2)`, with `d` the distance from the pole tip to the upright
/// goal `(0, l)`. The angle is measured from upright, so `theta = pi` hangs.
pub fn pendulum_cost(state: &[f64], length: f64) -> f64 {
    let (x, theta) = (state[0], state[1]);
    let dx = x + length * theta.sin();
    let dy = length * theta.cos() - length;
    1.0 - (-2.0 * (dx * dx + dy * dy)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeSpec {
    pub horizon: usize,
    pub initial_mean: Vec<f64>,
    /// Per-dimension standard deviation of the initial state.
    pub initial_std: Vec<f64>,
    pub action_bound: f64,
    /// Pole length used by the cost function.
    pub cost_length: f64,
    pub step: OdeStepConfig,
}

impl Default for EpisodeSpec {
    fn default() -> Self {
        Self {
            horizon: 25,
            initial_mean: vec![0.0, PI, 0.0, 0.0],
            initial_std: vec![0.2; 4],
            action_bound: 10.0,
            cost_length: PendulumParams::real_system().length,
            step: OdeStepConfig::default(),
        }
    }
}

impl EpisodeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0
            || self.initial_mean.len() != self.initial_std.len()
            || self.initial_std.iter().any(|s| !(*s >= 0.0))
            || !(self.action_bound > 0.0)
            || !(self.cost_length > 0.0)
        {
            return Err(Error::Config(format!("invalid episode specification: {self:?}")));
        }
        self.step.validate()
    }

    pub fn sample_initial_state(&self, rng: &mut Rng) -> Vec<f64> {
        self.initial_mean
            .iter()
            .zip(&self.initial_std)
            .map(|(m, s)| {
                let z: f64 = StandardNormal.sample(rng);
                m + s * z
            })
            .collect()
    }
}

/// Anything that maps a state to an action.
pub trait Policy {
    fn act(&mut self, state: &[f64]) -> Vec<f64>;
}

impl Policy for SacAgent {
    fn act(&mut self, state: &[f64]) -> Vec<f64> {
        SacAgent::act(self, state)
    }
}

/// Always returns the same action.
#[derive(Debug, Clone)]
pub struct ConstantPolicy(pub Vec<f64>);

impl Policy for ConstantPolicy {
    fn act(&mut self, _: &[f64]) -> Vec<f64> {
        self.0.clone()
    }
}

/// The "real" cart-pole.
#[derive(Debug, Clone)]
pub struct PendulumEnv {
    pub model: PendulumModel,
}

impl PendulumEnv {
    pub fn real(step: OdeStepConfig) -> Result<Self> {
        Ok(Self { model: PendulumModel::new(PendulumParams::real_system(), step)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub transitions: Vec<Transition>,
    /// Mean per-step cost.
    pub normalized_cost: f64,
}

fn clamp_action(mut a: Vec<f64>, bound: f64) -> Vec<f64> {
    for v in a.iter_mut() {
        *v = v.clamp(-bound, bound);
    }
    a
}

/// Runs one episode on the real system. Per-step cost is evaluated at the
/// state reached after the step.
pub fn run_real_episode(env: &PendulumEnv, policy: &mut dyn Policy, spec: &EpisodeSpec, rng: &mut Rng) -> Result<Episode> {
    spec.validate()?;
    let mut state = spec.sample_initial_state(rng);
    let mut transitions = Vec::with_capacity(spec.horizon);
    for step in 0..spec.horizon {
        let action = clamp_action(policy.act(&state), spec.action_bound);
        let next = env
            .model
            .step(&state, action[0])
            .map_err(|e| e.context(format!("real episode step {step}")))?;
        let cost = pendulum_cost(&next, spec.cost_length);
        transitions.push(Transition {
            state: std::mem::replace(&mut state, next.clone()),
            action,
            cost,
            next_state: next,
            model_generated: false,
        });
    }
    let normalized_cost = transitions.iter().map(|t| t.cost).sum::<f64>() / spec.horizon as f64;
    Ok(Episode { transitions, normalized_cost })
}

/// Particle rollout through a dynamics model: each next state is one draw
/// from the predictive Gaussian (variance multiplied by `variance_scale`),
/// clipped to the pendulum domain. A non-finite draw ends the rollout early.
pub fn run_model_episode(
    dynamics: &DynamicsModel,
    policy: &mut dyn Policy,
    spec: &EpisodeSpec,
    variance_scale: f64,
    rng: &mut Rng,
) -> Result<Vec<Transition>> {
    spec.validate()?;
    let domain = DomainBox::pendulum_states();
    let mut state = spec.sample_initial_state(rng);
    domain.clip(&mut state);
    let mut transitions = Vec::with_capacity(spec.horizon);
    for _ in 0..spec.horizon {
        let action = clamp_action(policy.act(&state), spec.action_bound);
        let p = dynamics.predict_next_state(&state, &action)?;
        let mut next: Vec<f64> = (0..p.output_dim())
            .map(|j| {
                let z: f64 = StandardNormal.sample(rng);
                p.mean[(0, j)] + (p.variance[(0, j)] * variance_scale).sqrt() * z
            })
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        domain.clip(&mut next);
        let cost = pendulum_cost(&next, spec.cost_length);
        transitions.push(Transition {
            state: std::mem::replace(&mut state, next.clone()),
            action,
            cost,
            next_state: next,
            model_generated: true,
        });
    }
    Ok(transitions)
}
