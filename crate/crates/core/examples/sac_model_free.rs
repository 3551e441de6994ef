//! Soft actor-critic directly on the real cart-pole, wired by hand: act,
//! store transitions in the real replay buffer, update. This is the model-free
//! baseline without the Dyna loop.
//!
//! ```text
//! cargo run --release --example sac_model_free [trials]
//! ```

use phys_adjust::control::{run_real_episode, EpisodeSpec, Observation, PendulumEnv, ReplayBuffers, SacAgent, SacConfig};
use phys_adjust::rng;

fn main() -> phys_adjust::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(15);
    let spec = EpisodeSpec::default();
    let env = PendulumEnv::real(spec.step)?;
    let config = SacConfig::default();
    let steps = config.steps_per_real_trial;
    let mut agent = SacAgent::new(config, Observation::Pendulum, 1, spec.action_bound, 0)?;
    let mut buffers = ReplayBuffers::new(100_000, 1)?;
    let mut env_rng = rng::seeded(1);

    for trial in 1..=trials {
        let episode = run_real_episode(&env, &mut agent, &spec, &mut env_rng)?;
        for t in episode.transitions {
            buffers.push_real(t)?;
        }
        let stats = agent.update(&buffers, steps)?;
        println!(
            "trial {trial:>3}: cost {:.3}  critic loss {:.4}  alpha {:.3}",
            episode.normalized_cost, stats.critic_loss, agent.alpha()
        );
    }
    let greedy = agent.act_deterministic(&spec.initial_mean);
    println!("deterministic action at the hanging start: {:+.2}", greedy[0]);
    Ok(())
}
