use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Adam with seeded random restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// Extra starts beyond the supplied initial point.
    pub restarts: usize,
    /// Standard deviation of the Gaussian perturbation applied to restart points.
    pub perturbation_std: f64,
    /// Every parameter is clamped into this interval after each step.
    pub bounds: (f64, f64),
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            learning_rate: 0.05,
            restarts: 3,
            perturbation_std: 1.0,
            bounds: (-12.0, 12.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerResult {
    pub params: Vec<f64>,
    pub value: f64,
    /// Best objective over the starting points, before any step was taken.
    pub initial_value: f64,
    /// Best-so-far objective after every evaluation, across all restarts.
    pub history: Vec<f64>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Minimizes `objective`, which returns a value and its gradient.
///
/// Restart 0 begins at `initial`; restart `k > 0` begins at `initial` plus
/// `N(0, perturbation_std^2)` noise drawn from a generator seeded by `config.seed`.
/// Starts whose objective is not finite are skipped.
pub fn optimize_hyperparams<F>(objective: F, initial: &[f64], config: &OptimizerConfig) -> Result<OptimizerResult>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let eval = |p: &[f64]| -> Option<(f64, Vec<f64>)> {
        match objective(p) {
            Ok((v, g)) if v.is_finite() && g.len() == p.len() => Some((v, g)),
            _ => None,
        }
    };

    let mut rng = rng::seeded(config.seed);
    let (lo, hi) = config.bounds;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut best_initial = f64::INFINITY;
    let mut history = Vec::new();

    for restart in 0..=config.restarts {
        let mut theta: Vec<f64> = initial.to_vec();
        if restart > 0 {
            for t in theta.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *t = (*t + config.perturbation_std * z).clamp(lo, hi);
            }
        }
        let Some((mut value, mut grad)) = eval(&theta) else {
            continue;
        };
        best_initial = best_initial.min(value);
        let mut m = vec![0.0; theta.len()];
        let mut v = vec![0.0; theta.len()];

        for it in 0..=config.iterations {
            if best.as_ref().is_none_or(|(bv, _)| value < *bv) {
                best = Some((value, theta.clone()));
            }
            history.push(best.as_ref().map(|b| b.0).unwrap_or(value));
            if it == config.iterations || grad.iter().any(|g| !g.is_finite()) {
                break;
            }
            let t = (it + 1) as i32;
            let bc1 = 1.0 - BETA1.powi(t);
            let bc2 = 1.0 - BETA2.powi(t);
            for i in 0..theta.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * grad[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * grad[i] * grad[i];
                let step = config.learning_rate * (m[i] / bc1) / ((v[i] / bc2).sqrt() + EPS);
                theta[i] = (theta[i] - step).clamp(lo, hi);
            }
            match eval(&theta) {
                Some((nv, ng)) => {
                    value = nv;
                    grad = ng;
                }
                None => break,
            }
        }
    }

    let (value, params) = best.ok_or_else(|| {
        Error::Optimization("objective was not finite at the starting point of any restart".into())
    })?;
    Ok(OptimizerResult {
        params,
        value,
        initial_value: best_initial,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(p: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok(((p[0] - 3.0).powi(2), vec![2.0 * (p[0] - 3.0)]))
    }

    #[test]
    fn convex_quadratic_converges() {
        let cfg = OptimizerConfig { iterations: 2000, restarts: 0, ..Default::default() };
        let r = optimize_hyperparams(quad, &[0.0], &cfg).unwrap();
        assert!((r.params[0] - 3.0).abs() < 1e-3, "{:?}", r.params);
    }

    #[test]
    fn never_worse_than_best_start() {
        let r = optimize_hyperparams(quad, &[0.0], &OptimizerConfig::default()).unwrap();
        assert!(r.value <= r.initial_value);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn restarts_are_deterministic() {
        let f = |p: &[f64]| -> Result<(f64, Vec<f64>)> {
            let v = (p[0] * 2.0).sin() + 0.1 * p[0] * p[0] + (p[1] - 1.0).powi(2);
            Ok((v, vec![2.0 * (p[0] * 2.0).cos() + 0.2 * p[0], 2.0 * (p[1] - 1.0)]))
        };
        let cfg = OptimizerConfig { restarts: 5, seed: 42, ..Default::default() };
        let a = optimize_hyperparams(f, &[2.0, -1.0], &cfg).unwrap();
        let b = optimize_hyperparams(f, &[2.0, -1.0], &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn all_starts_non_finite_is_an_error() {
        let f = |_: &[f64]| -> Result<(f64, Vec<f64>)> { Ok((f64::NAN, vec![0.0])) };
        assert!(matches!(
            optimize_hyperparams(f, &[0.0], &OptimizerConfig::default()),
            Err(Error::Optimization(_))
        ));
    }
}
