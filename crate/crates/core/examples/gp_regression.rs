//! The numerical core on its own: build an RBF covariance, factorize it,
//! evaluate the negative log marginal likelihood with its analytic gradient,
//! and optimize the log-hyperparameters with seeded Adam restarts.
//!
//! ```text
//! cargo run --release --example gp_regression
//! ```

use nalgebra::{DMatrix, DVector};

use phys_adjust::numerics::{
    factorize, nlml_with_gradient, optimize_hyperparams, rbf_kernel, rbf_kernel_with_grads, KernelParams,
    OptimizerConfig,
};

/// Parameters are `[log lengthscale, log signal variance, log noise std]`.
fn objective(x: &DMatrix<f64>, y: &DVector<f64>, theta: &[f64]) -> phys_adjust::Result<(f64, Vec<f64>)> {
    let params = KernelParams { log_lengthscales: vec![theta[0]], log_signal_variance: theta[1] };
    let (mut k, mut dk) = rbf_kernel_with_grads(x, &params)?;
    let s2 = (2.0 * theta[2]).exp();
    for i in 0..k.nrows() {
        k[(i, i)] += s2;
    }
    dk.push(DMatrix::from_diagonal_element(k.nrows(), k.nrows(), 2.0 * s2));
    let (v, g, _) = nlml_with_gradient(y, &k, &dk, &[])?;
    Ok((v, g))
}

fn main() -> phys_adjust::Result<()> {
    let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0 * 6.0).collect();
    let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x.sin() + 0.05 * ((i * 7919) % 13) as f64 / 13.0).collect();
    let x = DMatrix::from_column_slice(20, 1, &xs);
    let y = DVector::from_column_slice(&ys);

    let init = [0.0, 0.0, (0.3f64).ln()];
    let (v0, g0) = objective(&x, &y, &init)?;
    println!("initial nlml {v0:.4}, gradient {g0:.4?}");

    let cfg = OptimizerConfig { iterations: 300, restarts: 3, seed: 1, ..OptimizerConfig::default() };
    let best = optimize_hyperparams(|t| objective(&x, &y, t), &init, &cfg)?;
    let [l, sv, sn] = [best.params[0].exp(), best.params[1].exp(), best.params[2].exp()];
    println!("optimized nlml {:.4}: lengthscale {l:.3}, signal variance {sv:.3}, noise std {sn:.4}", best.value);

    // posterior mean at a few test points
    let params = KernelParams { log_lengthscales: vec![best.params[0]], log_signal_variance: best.params[1] };
    let mut k = rbf_kernel(&x, &x, &params)?;
    for i in 0..20 {
        k[(i, i)] += sn * sn;
    }
    let factor = factorize(&k)?;
    let alpha = factor.solve_vec(&y);
    let xt = DMatrix::from_column_slice(4, 1, &[0.5, 1.5, 3.3, 5.9]);
    let mean = rbf_kernel(&xt, &x, &params)? * alpha;
    for (xv, m) in xt.iter().zip(mean.iter()) {
        println!("  f({xv:.1}) = {m:+.4}   sin = {:+.4}", xv.sin());
    }
    println!("jitter added to the diagonal: {:.2e}", factor.jitter_used());
    Ok(())
}
