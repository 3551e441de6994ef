//! Cart-pole with a uniform pole.
//!
//! State is `[x, theta, x_dot, theta_dot]` with `theta = 0` upright and
//! `theta = pi` hanging down; `theta` is not wrapped. The action is the
//! horizontal force on the cart in newtons.

use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ode::{integrate_step, OdeStepConfig, OdeSystem};
use super::{check_input, PhysicsModel};
use crate::error::{Error, Result};
use crate::rng;

pub const PENDULUM_STATE_DIM: usize = 4;
pub const PENDULUM_ACTION_DIM: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumParams {
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub length: f64,
    pub damping: f64,
    pub gravity: f64,
}

impl PendulumParams {
    /// The real system: `m_c = m_p = 0.5 kg`, `l = 0.6 m`, `b = 0.1 N s/m`.
    pub fn real_system() -> Self {
        Self {
            cart_mass: 0.5,
            pole_mass: 0.5,
            length: 0.6,
            damping: 0.1,
            gravity: 9.81,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.cart_mass > 0.0 && self.pole_mass > 0.0 && self.length > 0.0 && self.damping >= 0.0 && self.gravity > 0.0;
        if !ok {
            return Err(Error::invalid(format!("invalid pendulum parameters {self:?}")));
        }
        Ok(())
    }
}

/// Time derivative of the cart-pole state.
pub fn pendulum_ode(state: &[f64; 4], action: f64, p: &PendulumParams) -> [f64; 4] {
    let [_, theta, x_dot, theta_dot] = *state;
    let (s, c) = theta.sin_cos();
    let m = p.pole_mass;
    let total = p.cart_mass + p.pole_mass;
    let l = p.length;
    let g = p.gravity;
    let force = action - p.damping * x_dot;
    let x_acc = (2.0 * m * l * theta_dot * theta_dot * s - 3.0 * m * g * s * c + 4.0 * force) / (4.0 * total - 3.0 * m * c * c);
    let theta_acc = (-3.0 * m * l * theta_dot * theta_dot * s * c + 6.0 * total * g * s - 6.0 * force * c)
        / (4.0 * l * total - 3.0 * m * l * c * c);
    [x_dot, theta_dot, x_acc, theta_acc]
}

/// Total mechanical energy (kinetic plus potential, pivot height as zero).
pub fn pendulum_energy(state: &[f64; 4], p: &PendulumParams) -> f64 {
    let [_, theta, x_dot, theta_dot] = *state;
    let m = p.pole_mass;
    let l = p.length;
    let total = p.cart_mass + m;
    0.5 * total * x_dot * x_dot
        + 0.5 * m * l * theta.cos() * x_dot * theta_dot
        + m * l * l / 6.0 * theta_dot * theta_dot
        + 0.5 * m * p.gravity * l * theta.cos()
}

#[derive(Debug, Clone, Copy)]
pub struct PendulumOde {
    pub params: PendulumParams,
}

impl OdeSystem for PendulumOde {
    fn state_dim(&self) -> usize {
        PENDULUM_STATE_DIM
    }

    fn derivative(&self, state: &[f64], action: &[f64], out: &mut [f64]) {
        let s = [state[0], state[1], state[2], state[3]];
        out.copy_from_slice(&pendulum_ode(&s, action[0], &self.params));
    }
}

/// One environment step of the cart-pole, as a physics model from
/// `[x, theta, x_dot, theta_dot, a]` to the next state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumModel {
    pub params: PendulumParams,
    pub step: OdeStepConfig,
}

impl PendulumModel {
    pub fn new(params: PendulumParams, step: OdeStepConfig) -> Result<Self> {
        params.validate()?;
        step.validate()?;
        Ok(Self { params, step })
    }

    pub fn step(&self, state: &[f64], action: f64) -> Result<Vec<f64>> {
        integrate_step(&PendulumOde { params: self.params }, state, &[action], &self.step)
    }
}

impl PhysicsModel for PendulumModel {
    fn input_dim(&self) -> usize {
        PENDULUM_STATE_DIM + PENDULUM_ACTION_DIM
    }

    fn output_dim(&self) -> usize {
        PENDULUM_STATE_DIM
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(self, x)?;
        self.step(&x[..PENDULUM_STATE_DIM], x[PENDULUM_STATE_DIM])
    }
}

/// A mismatched pendulum: masses and length drawn once from
/// `m_c ~ U(0.4, 0.6)`, `m_p ~ U(0.5, 0.7)`, `l ~ U(0.5, 0.7)`, no damping.
pub fn make_perturbed_pendulum(seed: u64, step: OdeStepConfig) -> Result<PendulumModel> {
    let mut r = rng::seeded(seed);
    let params = PendulumParams {
        cart_mass: r.random_range(0.4..0.6),
        pole_mass: r.random_range(0.5..0.7),
        length: r.random_range(0.5..0.7),
        damping: 0.0,
        gravity: 9.81,
    };
    PendulumModel::new(params, step)
}

/// Axis-aligned box used to keep model rollouts inside the trained regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBox {
    /// `x in [-6, 6]`, `theta in [-2 pi, 4 pi]`, `x_dot in [-10, 10]`,
    /// `theta_dot in [-25, 25]`, `a in [-10, 10]`.
    pub fn pendulum_inputs() -> Self {
        Self {
            lower: vec![-6.0, -2.0 * PI, -10.0, -25.0, -10.0],
            upper: vec![6.0, 4.0 * PI, 10.0, 25.0, 10.0],
        }
    }

    pub fn pendulum_states() -> Self {
        let mut b = Self::pendulum_inputs();
        b.lower.truncate(PENDULUM_STATE_DIM);
        b.upper.truncate(PENDULUM_STATE_DIM);
        b
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clip(&self, v: &mut [f64]) {
        for ((x, lo), hi) in v.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.iter().zip(&self.lower).zip(&self.upper).all(|((x, lo), hi)| *lo <= *x && *x <= *hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real() -> PendulumParams {
        PendulumParams::real_system()
    }

    #[test]
    fn hanging_equilibrium_is_stationary() {
        let d = pendulum_ode(&[0.0, PI, 0.0, 0.0], 0.0, &real());
        assert!(d.iter().all(|v| v.abs() < 1e-12), "{d:?}");
    }

    #[test]
    fn forced_hanging_state() {
        let d = pendulum_ode(&[0.0, PI, 0.0, 0.0], 10.0, &real());
        let expect = [0.0, 0.0, 16.0, 40.0];
        for (a, b) in d.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn upright_equilibrium_without_damping() {
        let mut p = real();
        p.damping = 0.0;
        assert_eq!(pendulum_ode(&[0.0; 4], 0.0, &p), [0.0; 4]);
    }

    #[test]
    fn hanging_is_stable_and_upright_is_not() {
        let model = PendulumModel::new(real(), OdeStepConfig::default()).unwrap();
        let mut down = vec![0.0, PI + 0.05, 0.0, 0.0];
        let mut up = vec![0.0, 0.05, 0.0, 0.0];
        for _ in 0..10 {
            down = model.step(&down, 0.0).unwrap();
            up = model.step(&up, 0.0).unwrap();
        }
        assert!((down[1] - PI).abs() < 0.1);
        assert!(up[1].abs() > 0.5);
    }

    #[test]
    fn integrated_equilibrium_is_fixed_point() {
        let model = PendulumModel::new(real(), OdeStepConfig::default()).unwrap();
        let next = model.evaluate(&[0.0, PI, 0.0, 0.0, 0.0]).unwrap();
        for (a, b) in next.iter().zip([0.0, PI, 0.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_is_conserved_without_damping_or_force() {
        let mut p = real();
        p.damping = 0.0;
        let model = PendulumModel::new(p, OdeStepConfig::default()).unwrap();
        let mut r = rng::seeded(4);
        for _ in 0..5 {
            let mut s = vec![
                r.random_range(-1.0..1.0),
                r.random_range(0.0..2.0 * PI),
                r.random_range(-2.0..2.0),
                r.random_range(-4.0..4.0),
            ];
            let e0 = pendulum_energy(&[s[0], s[1], s[2], s[3]], &p);
            for _ in 0..25 {
                s = model.step(&s, 0.0).unwrap();
            }
            let e1 = pendulum_energy(&[s[0], s[1], s[2], s[3]], &p);
            // relative to the energy scale of the pole, since E itself can cross zero
            let scale = e0.abs().max(0.5 * p.pole_mass * p.gravity * p.length);
            assert!((e1 - e0).abs() / scale < 1e-3, "{e0} -> {e1}");
        }
    }

    #[test]
    fn substep_halving_changes_little() {
        let step = |n| PendulumModel::new(real(), OdeStepConfig { step_size: 0.1, substeps: n }).unwrap();
        let x = [0.3, 2.0, 0.5, -1.0, 4.0];
        let a = step(8).evaluate(&x).unwrap();
        let b = step(4).evaluate(&x).unwrap();
        assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-6));
    }

    #[test]
    fn perturbed_model_support_and_determinism() {
        for seed in 0..50 {
            let m = make_perturbed_pendulum(seed, OdeStepConfig::default()).unwrap();
            let p = m.params;
            assert!((0.4..0.6).contains(&p.cart_mass));
            assert!((0.5..0.7).contains(&p.pole_mass));
            assert!((0.5..0.7).contains(&p.length));
            assert_eq!(p.damping, 0.0);
            assert_eq!(m, make_perturbed_pendulum(seed, OdeStepConfig::default()).unwrap());
        }
    }

    #[test]
    fn domain_box_clips() {
        let b = DomainBox::pendulum_states();
        let mut s = [100.0, -100.0, 0.0, 30.0];
        b.clip(&mut s);
        assert_eq!(s, [6.0, -2.0 * PI, 0.0, 25.0]);
        assert!(b.contains(&s));
    }
}
