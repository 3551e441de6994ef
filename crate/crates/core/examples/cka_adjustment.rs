//! Co-kriging adjustment: `f_a = rho(x) f_p(x) + delta(x)` with GP priors on
//! `rho` (mean 1) and `delta` (mean 0). Shows the fitted hyperparameters and
//! how the posterior reverts to the physics model away from the data.
//!
//! ```text
//! cargo run --release --example cka_adjustment
//! ```

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use phys_adjust::bench::ForresterConfig;
use phys_adjust::physics::{forrester_crude, forrester_true, ForresterCrude};
use phys_adjust::rng;
use phys_adjust::surrogates::{fit, Dataset, ModelKind, ScalarPhysics};

fn main() -> phys_adjust::Result<()> {
    let mut r = rng::seeded(3);
    let xs: Vec<f64> = (0..8).map(|_| r.random_range(0.0..1.0)).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| forrester_true(x)).collect();
    let data = Dataset::from_scalar(&xs, &ys)?;
    let cfg = ForresterConfig::default().fit.reseeded(3);
    let model = fit(ModelKind::Cka, &data, ScalarPhysics::new(&ForresterCrude, 0)?, &cfg)?;

    let gp = model.as_gp().expect("cka is a GP");
    let hp = gp.hyperparams();
    let sd = gp.input_scaling().scale[0];
    if let (Some(rho), Some(delta)) = (&hp.rho, &hp.delta) {
        println!("rho:   lengthscale {:.3} (x units), variance {:.3e}", rho.lengthscales()[0] * sd, rho.signal_variance());
        println!("delta: lengthscale {:.3} (x units), variance {:.3e}", delta.lengthscales()[0] * sd, delta.signal_variance());
    }
    println!("noise variance {:.3e}, nlml {:.3}", gp.noise_variance(), gp.nlml());

    println!("\n{:>7} {:>10} {:>10} {:>10} {:>9}", "x", "f_true", "f_p", "mean", "std");
    for x in [-0.6, -0.2, 0.1, 0.5, 0.9, 1.0, 3.0, 30.0] {
        let fp = forrester_crude(x);
        let p = model.predict(&DMatrix::from_element(1, 1, x), &DVector::from_element(1, fp))?;
        println!(
            "{x:>7.2} {:>10.3} {fp:>10.3} {:>10.3} {:>9.3}",
            forrester_true(x),
            p.mean[(0, 0)],
            p.variance[(0, 0)].sqrt()
        );
    }
    println!("\nfar from the data the mean is f_p and the variance the prior variance plus noise");
    Ok(())
}
