//! The cart-pole: real system vs a parameter-perturbed physics model, RK4
//! accuracy, and the saturating swing-up cost.
//!
//! ```text
//! cargo run --release --example pendulum_simulation
//! ```

use std::f64::consts::PI;

use phys_adjust::control::pendulum_cost;
use phys_adjust::physics::{make_perturbed_pendulum, pendulum_energy, OdeStepConfig, PendulumModel, PendulumParams};

fn main() -> phys_adjust::Result<()> {
    let step = OdeStepConfig::default();
    let real = PendulumModel::new(PendulumParams::real_system(), step)?;
    let crude = make_perturbed_pendulum(42, step)?;
    println!("real params      {:?}", real.params);
    println!("perturbed params {:?}", crude.params);

    // energy pumping from the hanging position: push along the pole's swing
    // (x cos theta has the sign of the horizontal tip velocity), 25 steps of 0.1 s
    let mut s_real = vec![0.0, PI, 0.0, 0.0];
    let mut s_crude = s_real.clone();
    println!("\n{:>4} {:>6} {:>7} {:>9} {:>9} {:>7} {:>9}", "step", "a", "x", "theta", "theta_p", "cost", "energy");
    for t in 0..25 {
        let a = if s_real[3] * s_real[1].cos() >= 0.0 { -10.0 } else { 10.0 } - 2.0 * s_real[0];
        let a = a.clamp(-10.0, 10.0);
        s_real = real.step(&s_real, a)?;
        s_crude = crude.step(&s_crude, a)?;
        let st: [f64; 4] = [s_real[0], s_real[1], s_real[2], s_real[3]];
        println!(
            "{t:>4} {a:>6.1} {:>7.3} {:>9.3} {:>9.3} {:>7.3} {:>9.3}",
            s_real[0],
            s_real[1],
            s_crude[1],
            pendulum_cost(&s_real, real.params.length),
            pendulum_energy(&st, &real.params)
        );
    }

    // halving the RK4 sub-step shrinks the error about 16x
    let s0 = [0.1, 2.0, 0.5, 1.0];
    let at = |n| PendulumModel::new(PendulumParams::real_system(), OdeStepConfig { substeps: n, ..step }).and_then(|m| m.step(&s0, 3.0));
    let reference = at(4096)?;
    let err = |n| -> phys_adjust::Result<f64> { Ok(at(n)?.iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()) };
    println!("\nRK4 error 4 substeps {:.2e}, 8 substeps {:.2e}, ratio {:.1}", err(4)?, err(8)?, err(4)? / err(8)?);
    Ok(())
}
