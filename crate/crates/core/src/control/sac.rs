//! Soft actor-critic with double Q-functions and automatic entropy tuning.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::buffers::ReplayBuffers;
use super::nn::{AdamState, Mlp};
use super::Transition;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const TANH_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub gamma: f64,
    /// Polyak coefficient for the target critics.
    pub tau: f64,
    pub initial_alpha: f64,
    /// Defaults to `-action_dim`.
    pub target_entropy: Option<f64>,
    pub log_std_bounds: (f64, f64),
    /// Gradient steps after each real / model trial.
    pub steps_per_real_trial: usize,
    pub steps_per_model_trial: usize,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            // 3e-4 learns too slowly for the 25-step swing-up budget
            learning_rate: 1e-3,
            batch_size: 128,
            gamma: 0.99,
            tau: 0.005,
            initial_alpha: 0.2,
            target_entropy: None,
            log_std_bounds: (-5.0, 2.0),
            steps_per_real_trial: 200,
            steps_per_model_trial: 20,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.batch_size > 0
            && (0.0..=1.0).contains(&self.gamma)
            && self.tau > 0.0
            && self.tau < 1.0
            && self.initial_alpha > 0.0
            && self.log_std_bounds.0 < self.log_std_bounds.1
            && self.hidden.iter().all(|&h| h > 0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid SAC configuration: {self:?}")))
        }
    }
}

/// How environment states are turned into network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observation {
    /// `[x/2, sin(theta), cos(theta), xdot/5, thetadot/10]` from a cart-pole state.
    Pendulum,
    Raw(usize),
}

impl Observation {
    pub fn dim(self) -> usize {
        match self {
            Observation::Pendulum => 5,
            Observation::Raw(n) => n,
        }
    }

    pub fn write(self, state: &[f64], out: &mut [f64]) {
        match self {
            Observation::Pendulum => {
                out[0] = state[0] / 2.0;
                out[1] = state[1].sin();
                out[2] = state[1].cos();
                out[3] = state[2] / 5.0;
                out[4] = state[3] / 10.0;
            }
            Observation::Raw(n) => out[..n].copy_from_slice(&state[..n]),
        }
    }

    fn batch<'a>(self, states: impl ExactSizeIterator<Item = &'a [f64]>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), states.len());
        for (j, s) in states.enumerate() {
            let mut col = vec![0.0; self.dim()];
            self.write(s, &mut col);
            m.set_column(j, &DVector::from_vec(col));
        }
        m
    }
}

/// Running averages from a block of gradient steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub steps: usize,
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub alpha: f64,
    pub entropy: f64,
}

struct PolicySample {
    /// tanh-squashed actions in `[-1, 1]`, `k x B`.
    squashed: DMatrix<f64>,
    log_prob: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    config: SacConfig,
    observation: Observation,
    action_dim: usize,
    action_bound: f64,
    policy: Mlp,
    q: [Mlp; 2],
    q_target: [Mlp; 2],
    log_alpha: f64,
    target_entropy: f64,
    opt_policy: AdamState,
    opt_q: [AdamState; 2],
    opt_alpha: AdamState,
    rng: Rng,
    updates: usize,
}

impl SacAgent {
    pub fn new(
        config: SacConfig,
        observation: Observation,
        action_dim: usize,
        action_bound: f64,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if action_dim == 0 || !(action_bound > 0.0) {
            return Err(Error::invalid("action dimension and bound must be positive"));
        }
        let mut init = rng::seeded(rng::derive_seed(seed, &[0]));
        let obs = observation.dim();
        let sizes = |i: usize, o: usize| -> Vec<usize> {
            std::iter::once(i).chain(config.hidden.iter().copied()).chain(std::iter::once(o)).collect()
        };
        let mut policy = Mlp::new(&sizes(obs, 2 * action_dim), &mut init);
        // start close to a zero-mean, unit-ish spread policy
        policy.scale_output_layer(0.1);
        let q0 = Mlp::new(&sizes(obs + action_dim, 1), &mut init);
        let q1 = Mlp::new(&sizes(obs + action_dim, 1), &mut init);
        let lr = config.learning_rate;
        Ok(Self {
            opt_policy: AdamState::new(policy.n_params(), lr),
            opt_q: [AdamState::new(q0.n_params(), lr), AdamState::new(q1.n_params(), lr)],
            opt_alpha: AdamState::new(1, lr),
            q_target: [q0.clone(), q1.clone()],
            q: [q0, q1],
            policy,
            log_alpha: config.initial_alpha.ln(),
            target_entropy: config.target_entropy.unwrap_or(-(action_dim as f64)),
            observation,
            action_dim,
            action_bound,
            rng: rng::seeded(rng::derive_seed(seed, &[1])),
            updates: 0,
            config,
        })
    }

    pub fn config(&self) -> &SacConfig {
        &self.config
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn action_bound(&self) -> f64 {
        self.action_bound
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    fn split_head(&self, out: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let k = self.action_dim;
        let (lo, hi) = self.config.log_std_bounds;
        let mean = out.rows(0, k).into_owned();
        let log_std = out.rows(k, k).map(|v| v.clamp(lo, hi));
        (mean, log_std)
    }

    fn observe(&self, state: &[f64]) -> DMatrix<f64> {
        self.observation.batch(std::iter::once(state))
    }

    /// A stochastic action from the current policy, in environment units.
    pub fn act(&mut self, state: &[f64]) -> Vec<f64> {
        let out = self.policy.forward(&self.observe(state));
        let (mean, log_std) = self.split_head(&out);
        (0..self.action_dim)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                self.action_bound * (mean[i] + log_std[i].exp() * z).tanh()
            })
            .collect()
    }

    /// The policy's mode (tanh of the Gaussian mean), in environment units.
    pub fn act_deterministic(&self, state: &[f64]) -> Vec<f64> {
        let out = self.policy.forward(&self.observe(state));
        (0..self.action_dim).map(|i| self.action_bound * out[i].tanh()).collect()
    }

    fn sample_policy(&mut self, obs: &DMatrix<f64>) -> PolicySample {
        let out = self.policy.forward(obs);
        let (mean, log_std) = self.split_head(&out);
        let eps = DMatrix::from_fn(mean.nrows(), mean.ncols(), |_, _| StandardNormal.sample(&mut self.rng));
        squash(&mean, &log_std, &eps)
    }

    fn inputs(&self, batch: &[&Transition]) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let s = self.observation.batch(batch.iter().map(|t| t.state.as_slice()));
        let s2 = self.observation.batch(batch.iter().map(|t| t.next_state.as_slice()));
        let a = DMatrix::from_fn(self.action_dim, batch.len(), |i, j| batch[j].action[i] / self.action_bound);
        let r = DVector::from_iterator(batch.len(), batch.iter().map(|t| -t.cost));
        (s, a, r, s2)
    }

    /// Soft Bellman targets `r + gamma (min_i Q'_i(s', a') - alpha log pi(a'|s'))`.
    pub(crate) fn critic_targets(&mut self, batch: &[&Transition]) -> DVector<f64> {
        let (_, _, r, s2) = self.inputs(batch);
        let next = self.sample_policy(&s2);
        let x2 = stack(&s2, &next.squashed);
        let t0 = self.q_target[0].forward(&x2);
        let t1 = self.q_target[1].forward(&x2);
        let alpha = self.alpha();
        DVector::from_fn(batch.len(), |j, _| {
            r[j] + self.config.gamma * (t0[(0, j)].min(t1[(0, j)]) - alpha * next.log_prob[j])
        })
    }

    /// Mean squared Bellman error of each critic against fixed targets.
    #[cfg(test)]
    pub(crate) fn critic_losses(&self, batch: &[&Transition], targets: &DVector<f64>) -> [f64; 2] {
        let (s, a, _, _) = self.inputs(batch);
        let x = stack(&s, &a);
        let b = batch.len() as f64;
        [0, 1].map(|i| {
            let q = self.q[i].forward(&x);
            0.5 * q.row(0).iter().zip(targets.iter()).map(|(q, y)| (q - y).powi(2)).sum::<f64>() / b
        })
    }

    pub(crate) fn update_critics(&mut self, batch: &[&Transition], targets: &DVector<f64>) -> f64 {
        let (s, a, _, _) = self.inputs(batch);
        let x = stack(&s, &a);
        let b = batch.len() as f64;
        let mut loss = 0.0;
        for i in 0..2 {
            let (q, cache) = self.q[i].forward_cached(&x);
            let diff = DMatrix::from_fn(1, batch.len(), |_, j| q[(0, j)] - targets[j]);
            loss += 0.5 * diff.norm_squared() / b;
            let (grads, _) = self.q[i].backward(&cache, &(diff / b));
            self.opt_q[i].step(&mut self.q[i], &grads);
        }
        loss / 2.0
    }

    /// Reparameterized policy step; returns `(actor loss, mean log-prob)`.
    fn update_actor(&mut self, batch: &[&Transition]) -> (f64, f64) {
        let (s, _, _, _) = self.inputs(batch);
        let n = batch.len();
        let b = n as f64;
        let k = self.action_dim;
        let (lo, hi) = self.config.log_std_bounds;
        let (out, pcache) = self.policy.forward_cached(&s);
        let mean = out.rows(0, k).into_owned();
        let raw_log_std = out.rows(k, k).into_owned();
        let log_std = raw_log_std.map(|v| v.clamp(lo, hi));
        let eps = DMatrix::from_fn(k, n, |_, _| StandardNormal.sample(&mut self.rng));
        let sample = squash(&mean, &log_std, &eps);

        let x = stack(&s, &sample.squashed);
        let (q0, c0) = self.q[0].forward_cached(&x);
        let (q1, c1) = self.q[1].forward_cached(&x);
        let pick0 = DMatrix::from_fn(1, n, |_, j| if q0[(0, j)] <= q1[(0, j)] { 1.0 } else { 0.0 });
        let pick1 = pick0.map(|v| 1.0 - v);
        let (_, g0) = self.q[0].backward(&c0, &pick0);
        let (_, g1) = self.q[1].backward(&c1, &pick1);
        let obs = s.nrows();

        let alpha = self.alpha();
        let mut grad = DMatrix::zeros(2 * k, n);
        let mut loss = 0.0;
        for j in 0..n {
            let qmin = q0[(0, j)].min(q1[(0, j)]);
            loss += (alpha * sample.log_prob[j] - qmin) / b;
            for i in 0..k {
                let t = sample.squashed[(i, j)];
                let one_m = 1.0 - t * t;
                let dlogp_du = 2.0 * t * one_m / (one_m + TANH_EPS);
                let dq_du = (g0[(obs + i, j)] + g1[(obs + i, j)]) * one_m;
                let du_dls = log_std[(i, j)].exp() * eps[(i, j)];
                grad[(i, j)] = (alpha * dlogp_du - dq_du) / b;
                let inside = raw_log_std[(i, j)] > lo && raw_log_std[(i, j)] < hi;
                grad[(k + i, j)] =
                    if inside { (alpha * (dlogp_du * du_dls - 1.0) - dq_du * du_dls) / b } else { 0.0 };
            }
        }
        let (grads, _) = self.policy.backward(&pcache, &grad);
        self.opt_policy.step(&mut self.policy, &grads);
        (loss, sample.log_prob.mean())
    }

    /// One full SAC step on a sampled batch.
    fn step(&mut self, buffers: &ReplayBuffers) -> Result<(f64, f64, f64)> {
        let batch = buffers.sample(self.config.batch_size, &mut self.rng)?;
        let targets = self.critic_targets(&batch);
        let critic = self.update_critics(&batch, &targets);
        let (actor, mean_log_prob) = self.update_actor(&batch);
        let g = -(mean_log_prob + self.target_entropy);
        let mut la = self.log_alpha;
        self.opt_alpha.step_scalar(&mut la, g);
        self.log_alpha = la.clamp(-20.0, 5.0);
        let tau = self.config.tau;
        for i in 0..2 {
            self.q_target[i].soft_update(&self.q[i], tau);
        }
        self.updates += 1;
        Ok((critic, actor, -mean_log_prob))
    }

    /// Runs `steps` gradient steps on batches mixed from both buffers.
    pub fn update(&mut self, buffers: &ReplayBuffers, steps: usize) -> Result<UpdateStats> {
        let mut stats = UpdateStats { alpha: self.alpha(), ..Default::default() };
        for _ in 0..steps {
            let (c, a, h) = self.step(buffers)?;
            if !(c.is_finite() && a.is_finite()) {
                return Err(Error::State(format!("SAC losses diverged (critic {c}, actor {a})")));
            }
            stats.steps += 1;
            let w = 1.0 / stats.steps as f64;
            stats.critic_loss += (c - stats.critic_loss) * w;
            stats.actor_loss += (a - stats.actor_loss) * w;
            stats.entropy += (h - stats.entropy) * w;
        }
        stats.alpha = self.alpha();
        Ok(stats)
    }
}

fn squash(mean: &DMatrix<f64>, log_std: &DMatrix<f64>, eps: &DMatrix<f64>) -> PolicySample {
    let (k, n) = mean.shape();
    let squashed = DMatrix::from_fn(k, n, |i, j| (mean[(i, j)] + log_std[(i, j)].exp() * eps[(i, j)]).tanh());
    let log_prob = DVector::from_fn(n, |j, _| {
        (0..k)
            .map(|i| {
                let t = squashed[(i, j)];
                -0.5 * eps[(i, j)].powi(2) - log_std[(i, j)] - 0.5 * LN_2PI - (1.0 - t * t + TANH_EPS).ln()
            })
            .sum()
    });
    PolicySample { squashed, log_prob }
}

fn stack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let (r1, n) = top.shape();
    let r2 = bottom.nrows();
    DMatrix::from_fn(r1 + r2, n, |i, j| if i < r1 { top[(i, j)] } else { bottom[(i - r1, j)] })
}
