//! Learned pendulum dynamics: one CKA surrogate per state dimension, each with
//! the matching output of a mismatched physics model as its prior. Compares
//! one-step errors on held-out real transitions, and rolls a model episode.
//!
//! ```text
//! cargo run --release --example dynamics_model
//! ```

use std::sync::Arc;

use rand::Rng as _;

use phys_adjust::control::{run_model_episode, run_real_episode, DynaConfig, EpisodeSpec, PendulumEnv, Policy};
use phys_adjust::physics::{make_perturbed_pendulum, PhysicsModel};
use phys_adjust::rng::{self, Rng};
use phys_adjust::surrogates::{fit_dynamics, ModelKind};

struct Uniform(Rng);

impl Policy for Uniform {
    fn act(&mut self, _: &[f64]) -> Vec<f64> {
        vec![self.0.random_range(-10.0..10.0)]
    }
}

fn main() -> phys_adjust::Result<()> {
    let spec = EpisodeSpec::default();
    let env = PendulumEnv::real(spec.step)?;
    let physics: Arc<dyn PhysicsModel> = Arc::new(make_perturbed_pendulum(5, spec.step)?);
    let mut policy = Uniform(rng::seeded(1));
    let mut env_rng = rng::seeded(2);

    let mut train = Vec::new();
    for _ in 0..5 {
        train.extend(run_real_episode(&env, &mut policy, &spec, &mut env_rng)?.transitions);
    }
    let test = run_real_episode(&env, &mut policy, &spec, &mut env_rng)?.transitions;

    let cfg = DynaConfig::default().dynamics_fit;
    let model = fit_dynamics(&train, physics.clone(), ModelKind::Cka, &cfg)?;
    println!("fitted on {} transitions; nlml per dimension {:.1?}", train.len(), model.fit_nlml());

    let names = ["x", "theta", "x_dot", "theta_dot"];
    let (mut e_model, mut e_phys) = ([0.0; 4], [0.0; 4]);
    for t in &test {
        let p = model.predict_next_state(&t.state, &t.action)?;
        let row: Vec<f64> = t.state.iter().chain(&t.action).copied().collect();
        let f = physics.evaluate(&row)?;
        for j in 0..4 {
            e_model[j] += (p.mean[(0, j)] - t.next_state[j]).powi(2) / test.len() as f64;
            e_phys[j] += (f[j] - t.next_state[j]).powi(2) / test.len() as f64;
        }
    }
    println!("\n{:<10} {:>10} {:>10}", "dimension", "cka rmse", "physics");
    for j in 0..4 {
        println!("{:<10} {:>10.4} {:>10.4}", names[j], e_model[j].sqrt(), e_phys[j].sqrt());
    }

    // a particle rollout through the learned model under the same random policy
    let rollout = run_model_episode(&model, &mut policy, &spec, 1.0, &mut rng::seeded(3))?;
    let cost = rollout.iter().map(|t| t.cost).sum::<f64>() / rollout.len() as f64;
    println!("\nmodel rollout: {} steps, normalized cost {cost:.3}", rollout.len());
    Ok(())
}
