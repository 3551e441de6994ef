use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::episode::{run_model_episode, run_real_episode, EpisodeSpec, PendulumEnv};
use super::{Observation, ReplayBuffers, SacAgent, SacConfig};
use crate::error::{Error, Result};
use crate::physics::{make_perturbed_pendulum, Persistence, PhysicsModel, PENDULUM_ACTION_DIM, PENDULUM_STATE_DIM};
use crate::rng;
use crate::surrogates::{fit_dynamics, DynamicsModel, FitConfig, ModelKind};

/// Training regimes compared on the pendulum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// SAC on real data only.
    Mf,
    /// Model data from the mismatched physics model itself.
    DynaPhy,
    /// Model data from a GP learned from scratch (physics-free).
    DynaGp,
    DynaCka,
    DynaRra,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [Scenario::Mf, Scenario::DynaPhy, Scenario::DynaGp, Scenario::DynaCka, Scenario::DynaRra];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Mf => "mf",
            Scenario::DynaPhy => "dyna-phy",
            Scenario::DynaGp => "dyna-gp",
            Scenario::DynaCka => "dyna-cka",
            Scenario::DynaRra => "dyna-rra",
        }
    }

    /// Surrogate refit after each real trial, if any.
    pub fn surrogate(self) -> Option<ModelKind> {
        match self {
            Scenario::Mf | Scenario::DynaPhy => None,
            Scenario::DynaGp => Some(ModelKind::PhyMeanGp),
            Scenario::DynaCka => Some(ModelKind::Cka),
            Scenario::DynaRra => Some(ModelKind::Rra),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynaConfig {
    pub trials: usize,
    pub model_trials_per_real_trial: usize,
    /// No model-based training after this many real trials.
    pub model_based_cutoff: usize,
    pub episode: EpisodeSpec,
    pub sac: SacConfig,
    pub dynamics_fit: FitConfig,
    pub real_buffer_capacity: usize,
    pub model_buffer_capacity: usize,
    /// Multiplies predictive variances when sampling model transitions.
    pub variance_scale: f64,
}

impl Default for DynaConfig {
    fn default() -> Self {
        let mut fit = FitConfig::default();
        fit.optimizer.iterations = 150;
        fit.optimizer.restarts = 1;
        fit.max_hyperopt_points = Some(100);
        Self {
            trials: 50,
            model_trials_per_real_trial: 20,
            model_based_cutoff: 25,
            episode: EpisodeSpec::default(),
            sac: SacConfig::default(),
            dynamics_fit: fit,
            real_buffer_capacity: 100_000,
            model_buffer_capacity: 5_000,
            variance_scale: 1.0,
        }
    }
}

/// One line of the per-trial log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub normalized_cost: f64,
    pub real_buffer: usize,
    pub model_buffer: usize,
    /// Surrogate refits so far.
    pub refits: usize,
    /// Training NLML per state dimension; `None` for closed-form models.
    pub nlml: Vec<Option<f64>>,
    pub critic_loss: f64,
    pub alpha: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRun {
    pub scenario: Scenario,
    pub seed: u64,
    /// Normalized cost of each real trial.
    pub curve: Vec<f64>,
    pub records: Vec<TrialRecord>,
    pub refit_count: usize,
    pub real_steps: usize,
}

impl ScenarioRun {
    /// First (1-based) trial whose cost is below `threshold`.
    pub fn trials_to(&self, threshold: f64) -> Option<usize> {
        self.curve.iter().position(|c| *c < threshold).map(|i| i + 1)
    }
}

pub fn run_dyna_scenario(scenario: Scenario, config: &DynaConfig, seed: u64) -> Result<ScenarioRun> {
    run_dyna_scenario_logged(scenario, config, seed, &mut |_| {})
}

/// Runs one scenario, calling `log` after every real trial.
///
/// Per real trial: one real episode into `D_R`; SAC updates; then, up to the
/// cutoff, a dynamics refit on all real data followed by model episodes into
/// `D_M`, each followed by SAC updates. After the cutoff `D_M` is emptied so
/// training continues on real data only.
pub fn run_dyna_scenario_logged(
    scenario: Scenario,
    config: &DynaConfig,
    seed: u64,
    log: &mut dyn FnMut(&TrialRecord),
) -> Result<ScenarioRun> {
    let ctx = |e: Error| e.context(format!("scenario {scenario}, seed {seed}"));
    config.episode.validate().map_err(ctx)?;
    let env = PendulumEnv::real(config.episode.step).map_err(ctx)?;
    let crude: Arc<dyn PhysicsModel> =
        Arc::new(make_perturbed_pendulum(rng::derive_seed(seed, &[1]), config.episode.step).map_err(ctx)?);
    let mut agent = SacAgent::new(
        config.sac.clone(),
        Observation::Pendulum,
        PENDULUM_ACTION_DIM,
        config.episode.action_bound,
        rng::derive_seed(seed, &[2]),
    )
    .map_err(ctx)?;
    let mut env_rng = rng::seeded(rng::derive_seed(seed, &[3]));
    let mut model_rng = rng::seeded(rng::derive_seed(seed, &[4]));
    let mut buffers = ReplayBuffers::new(config.real_buffer_capacity, config.model_buffer_capacity).map_err(ctx)?;

    let mut run = ScenarioRun {
        scenario,
        seed,
        curve: Vec::with_capacity(config.trials),
        records: Vec::with_capacity(config.trials),
        refit_count: 0,
        real_steps: 0,
    };

    for trial in 1..=config.trials {
        let started = Instant::now();
        let episode = run_real_episode(&env, &mut agent, &config.episode, &mut env_rng)
            .map_err(|e| ctx(e.context(format!("real trial {trial}"))))?;
        run.real_steps += episode.transitions.len();
        for t in episode.transitions {
            buffers.push_real(t).map_err(ctx)?;
        }
        let mut stats = agent.update(&buffers, config.sac.steps_per_real_trial).map_err(ctx)?;

        let mut nlml = Vec::new();
        let model_based = scenario != Scenario::Mf && trial <= config.model_based_cutoff;
        if model_based {
            let dynamics = match scenario.surrogate() {
                None => DynamicsModel::physics_only(crude.clone()),
                Some(kind) => {
                    let physics: Arc<dyn PhysicsModel> = if scenario == Scenario::DynaGp {
                        Arc::new(Persistence { input_dim: PENDULUM_STATE_DIM + PENDULUM_ACTION_DIM, output_dim: PENDULUM_STATE_DIM })
                    } else {
                        crude.clone()
                    };
                    let real: Vec<_> = buffers.real().iter().cloned().collect();
                    let cfg = config.dynamics_fit.reseeded(rng::derive_seed(seed, &[5, trial as u64]));
                    let m = fit_dynamics(&real, physics, kind, &cfg)
                        .map_err(|e| ctx(e.context(format!("dynamics refit after trial {trial}"))))?;
                    run.refit_count += 1;
                    nlml = m.surrogates().iter().map(|s| s.nlml()).collect();
                    m
                }
            };
            for _ in 0..config.model_trials_per_real_trial {
                let ts = run_model_episode(&dynamics, &mut agent, &config.episode, config.variance_scale, &mut model_rng)
                    .map_err(|e| ctx(e.context(format!("model rollout after trial {trial}"))))?;
                for t in ts {
                    buffers.push_model(t).map_err(ctx)?;
                }
                stats = agent.update(&buffers, config.sac.steps_per_model_trial).map_err(ctx)?;
            }
        } else if buffers.model_len() > 0 {
            buffers.clear_model();
        }

        let record = TrialRecord {
            trial,
            normalized_cost: episode.normalized_cost,
            real_buffer: buffers.real_len(),
            model_buffer: buffers.model_len(),
            refits: run.refit_count,
            nlml,
            critic_loss: stats.critic_loss,
            alpha: agent.alpha(),
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        log(&record);
        run.curve.push(episode.normalized_cost);
        run.records.push(record);
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> DynaConfig {
        let mut c = DynaConfig::default();
        c.trials = 4;
        c.model_trials_per_real_trial = 2;
        c.model_based_cutoff = 2;
        c.sac.steps_per_real_trial = 3;
        c.sac.steps_per_model_trial = 2;
        c.sac.batch_size = 16;
        c.dynamics_fit.optimizer.iterations = 10;
        c.dynamics_fit.optimizer.restarts = 0;
        c
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("dyna".parse::<Scenario>().is_err());
    }

    #[test]
    fn model_free_never_uses_model_buffer() {
        let run = run_dyna_scenario(Scenario::Mf, &tiny(), 0).unwrap();
        assert!(run.records.iter().all(|r| r.model_buffer == 0));
        assert_eq!(run.refit_count, 0);
        assert_eq!(run.real_steps, 4 * 25);
    }

    #[test]
    fn cka_protocol_trace() {
        let cfg = tiny();
        let mut seen = Vec::new();
        let run = run_dyna_scenario_logged(Scenario::DynaCka, &cfg, 1, &mut |r| seen.push(r.trial)).unwrap();
        assert_eq!(seen, vec![1, 2, 3, 4]);
        assert_eq!(run.refit_count, 2);
        assert_eq!(run.curve.len(), 4);
        assert!(run.curve.iter().all(|c| (0.0..1.0).contains(c)));
        assert_eq!(run.records[0].model_buffer, 50);
        assert_eq!(run.records[1].model_buffer, 100);
        assert_eq!(run.records[2].model_buffer, 0);
        assert_eq!(run.records[0].nlml.len(), 4);
        for (i, r) in run.records.iter().enumerate() {
            assert_eq!(r.real_buffer, 25 * (i + 1));
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let cfg = tiny();
        let a = run_dyna_scenario(Scenario::DynaPhy, &cfg, 3).unwrap();
        let b = run_dyna_scenario(Scenario::DynaPhy, &cfg, 3).unwrap();
        assert_eq!(a.curve, b.curve);
        let c = run_dyna_scenario(Scenario::DynaPhy, &cfg, 4).unwrap();
        assert_ne!(a.curve, c.curve);
    }
}
