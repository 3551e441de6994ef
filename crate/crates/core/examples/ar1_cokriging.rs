//! Recursive AR1 co-kriging as a multi-fidelity baseline: a GP on points
//! generated from the physics model (low fidelity), then a constant scale and
//! a GP bias fitted to the high-fidelity observations.
//!
//! ```text
//! cargo run --release --example ar1_cokriging
//! ```

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use phys_adjust::physics::{forrester_crude, forrester_true, ForresterCrude};
use phys_adjust::rng;
use phys_adjust::bench::ForresterConfig;
use phys_adjust::surrogates::{fit, Dataset, ModelKind, ScalarPhysics};

fn main() -> phys_adjust::Result<()> {
    let mut r = rng::seeded(3);
    let xs: Vec<f64> = (0..8).map(|_| r.random_range(0.0..1.0)).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| forrester_true(x)).collect();
    let data = Dataset::from_scalar(&xs, &ys)?;
    // 40 low-fidelity points on [-0.6, 1.0], many optimizer restarts
    let cfg = ForresterConfig::default().fit.reseeded(3);
    let physics = ScalarPhysics::new(&ForresterCrude, 0)?;

    let ar1 = fit(ModelKind::Ar1, &data, physics, &cfg)?;
    let zero = fit(ModelKind::ZeroMeanGp, &data, physics, &cfg)?;
    println!("ar1 nlml {:.3}", ar1.nlml().unwrap_or(f64::NAN));
    println!("{:>6} {:>9} {:>9} {:>11}", "x", "f_true", "ar1", "zero-mean");
    for x in [-0.5, -0.2, 0.2, 0.4, 0.75, 1.0] {
        let q = DMatrix::from_element(1, 1, x);
        let fp = DVector::from_element(1, forrester_crude(x));
        let a = ar1.predict(&q, &fp)?;
        let z = zero.predict(&q, &fp)?;
        println!("{x:>6.2} {:>9.3} {:>9.3} {:>11.3}", forrester_true(x), a.mean[(0, 0)], z.mean[(0, 0)]);
    }
    Ok(())
}
