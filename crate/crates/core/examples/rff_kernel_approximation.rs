//! Random Fourier features: `phi(x) . phi(y)` converges to the RBF kernel as
//! the number of features grows (error ~ 1/sqrt(D)).
//!
//! ```text
//! cargo run --release --example rff_kernel_approximation
//! ```

use nalgebra::DMatrix;
use rand::Rng as _;

use phys_adjust::numerics::{make_rff_map, rbf_kernel, rff_features, KernelParams};
use phys_adjust::rng;

fn main() -> phys_adjust::Result<()> {
    let d = 3;
    let lengthscale = 0.8f64;
    let mut r = rng::seeded(1);
    let x = DMatrix::<f64>::from_fn(50, d, |_, _| r.random_range(-1.0..1.0));
    let params = KernelParams { log_lengthscales: vec![lengthscale.ln(); d], log_signal_variance: 0.0 };
    let exact = rbf_kernel(&x, &x, &params)?;

    println!("{:>6} {:>12} {:>12}", "D", "max error", "mean error");
    for n_features in [10, 50, 200, 1000, 5000] {
        let map = make_rff_map(d, n_features, lengthscale, 7)?;
        let phi = rff_features(&map, &x)?;
        let approx = &phi * phi.transpose();
        let err = (approx - &exact).abs();
        println!("{n_features:>6} {:>12.4} {:>12.4}", err.max(), err.mean());
    }
    Ok(())
}
