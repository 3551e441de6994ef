//! Fit every surrogate to eight noisy-free observations of the Forrester
//! function, using the crude `f_p(x) = 0.5 f(x) + 10(x - 0.5) - 5` as physics,
//! and compare grid RMSE against the truth.
//!
//! ```text
//! cargo run --release --example forrester_comparison
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

    let grid: Vec<f64> = (0..40).map(|i| -0.6 + 1.6 * i as f64 / 39.0).collect();
    let xg = DMatrix::from_column_slice(40, 1, &grid);
    let fg = DVector::from_iterator(40, grid.iter().map(|&x| forrester_crude(x)));
    let truth = DVector::from_iterator(40, grid.iter().map(|&x| forrester_true(x)));
    let rmse = |m: &DVector<f64>| ((m - &truth).norm_squared() / 40.0).sqrt();

    // the tuned protocol settings (many optimizer restarts, RRA ridge/lengthscale)
    let cfg = ForresterConfig::default().fit.reseeded(3);
    let physics = ScalarPhysics::new(&ForresterCrude, 0)?;

    println!("{:<14} {:>8}", "model", "rmse");
    println!("{:<14} {:>8.3}", "crude-only", rmse(&fg));
    for kind in ModelKind::ALL {
        let model = fit(kind, &data, physics, &cfg)?;
        let p = model.predict(&xg, &fg)?;
        println!("{:<14} {:>8.3}", kind.to_string(), rmse(&p.mean_column(0)));
    }
    Ok(())
}
