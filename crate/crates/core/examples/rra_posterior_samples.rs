//! Ridge regression adjustment over random Fourier features: the posterior
//! mean, its Gaussian coefficient posterior, and deterministic functions drawn
//! from it.
//!
//! ```text
//! cargo run --release --example rra_posterior_samples
//! ```

use nalgebra::{DMatrix, DVector};

use phys_adjust::physics::{forrester_crude, forrester_true};
use phys_adjust::surrogates::{RraConfig, RraModel};

fn main() -> phys_adjust::Result<()> {
    let xs = [0.05, 0.2, 0.35, 0.45, 0.6, 0.7, 0.85, 0.95];
    let x = DMatrix::from_column_slice(8, 1, &xs);
    let y = DVector::from_iterator(8, xs.iter().map(|&v| forrester_true(v)));
    let fp = DVector::from_iterator(8, xs.iter().map(|&v| forrester_crude(v)));
    let cfg = RraConfig { lambda: 1e-5, lengthscale: 3.0, standardize_inputs: false, ..RraConfig::default() };
    let model = RraModel::fit(&x, &y, &fp, &cfg)?;
    println!(
        "{} coefficients, residual variance {:.2e} (scaled units), lambda {}",
        model.beta_mean().len(),
        model.noise_variance(),
        model.lambda()
    );

    let grid: Vec<f64> = (0..9).map(|i| -0.6 + 0.2 * i as f64).collect();
    let xg = DMatrix::from_column_slice(grid.len(), 1, &grid);
    let fg = DVector::from_iterator(grid.len(), grid.iter().map(|&v| forrester_crude(v)));
    let p = model.predict(&xg, &fg)?;
    let samples = (0..3).map(|s| model.sample_function(s)?.evaluate(&xg, &fg)).collect::<phys_adjust::Result<Vec<_>>>()?;

    println!("\n{:>6} {:>9} {:>9} {:>8}   samples", "x", "f_true", "mean", "std");
    for (i, xv) in grid.iter().enumerate() {
        let draws: Vec<String> = samples.iter().map(|s| format!("{:>8.3}", s[i])).collect();
        println!(
            "{xv:>6.2} {:>9.3} {:>9.3} {:>8.3}   {}",
            forrester_true(*xv),
            p.mean[(i, 0)],
            p.variance[(i, 0)].sqrt(),
            draws.join(" ")
        );
    }
    Ok(())
}
