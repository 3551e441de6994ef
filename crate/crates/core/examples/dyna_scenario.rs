//! The Dyna loop: after each real trial the dynamics surrogate is refitted and
//! SAC also trains on 20 model-generated trials (mixed 1:10 real:model in
//! every batch). Runs one scenario and prints the per-trial log.
//!
//! ```text
//! cargo run --release --example dyna_scenario -- [scenario] [trials] [seed]
//! cargo run --release --example dyna_scenario -- dyna-rra 10 3
//! ```

use phys_adjust::control::{run_dyna_scenario_logged, DynaConfig, Scenario};

fn main() -> phys_adjust::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario: Scenario = args.next().as_deref().unwrap_or("dyna-cka").parse()?;
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(12);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let config = DynaConfig { trials, ..DynaConfig::default() };

    println!("{scenario}, {trials} trials, seed {seed}");
    println!("{:>5} {:>7} {:>6} {:>6} {:>6} {:>8} {:>7}", "trial", "cost", "D_R", "D_M", "refits", "q loss", "secs");
    let run = run_dyna_scenario_logged(scenario, &config, seed, &mut |r| {
        println!(
            "{:>5} {:>7.3} {:>6} {:>6} {:>6} {:>8.4} {:>7.1}",
            r.trial, r.normalized_cost, r.real_buffer, r.model_buffer, r.refits, r.critic_loss, r.wall_time_s
        );
    })?;
    match run.trials_to(0.5) {
        Some(t) => println!("cost below 0.5 first at trial {t}"),
        None => println!("cost stayed above 0.5"),
    }
    Ok(())
}
