//! Small fully connected networks with hand-written backpropagation.
//!
//! Batches are stored column-wise: an input batch is `in_dim x B`.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    w: DMatrix<f64>,
    b: DVector<f64>,
}

/// ReLU hidden layers, linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Per-layer inputs and pre-activations from a forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<DMatrix<f64>>,
    pre: Vec<DMatrix<f64>>,
}

/// Gradients with the same shapes as the network parameters.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    layers: Vec<(DMatrix<f64>, DVector<f64>)>,
}

impl Mlp {
    /// `sizes = [in, hidden.., out]`; weights and biases are drawn from
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new(sizes: &[usize], rng: &mut Rng) -> Self {
        assert!(sizes.len() >= 2, "a network needs an input and an output size");
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                Dense {
                    w: DMatrix::from_fn(w[1], w[0], |_, _| rng.random_range(-bound..bound)),
                    b: DVector::from_fn(w[1], |_, _| rng.random_range(-bound..bound)),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.w.nrows())
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Scales the final layer's parameters, e.g. to start near a zero output.
    pub fn scale_output_layer(&mut self, factor: f64) {
        if let Some(l) = self.layers.last_mut() {
            l.w *= factor;
            l.b *= factor;
        }
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let last = self.layers.len() - 1;
        let mut h = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = affine(l, &h);
            if i < last {
                z.apply(|v| *v = v.max(0.0));
            }
            h = z;
        }
        h
    }

    pub fn forward_cached(&self, x: &DMatrix<f64>) -> (DMatrix<f64>, MlpCache) {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            let z = affine(l, &h);
            inputs.push(h);
            h = if i < last { z.map(|v| v.max(0.0)) } else { z.clone() };
            pre.push(z);
        }
        (h, MlpCache { inputs, pre })
    }

    /// Backpropagates `grad_out` (`out_dim x B`) through a cached pass.
    /// Returns parameter gradients and the gradient with respect to the input.
    pub fn backward(&self, cache: &MlpCache, grad_out: &DMatrix<f64>) -> (MlpGrads, DMatrix<f64>) {
        let last = self.layers.len() - 1;
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.clone();
        for i in (0..self.layers.len()).rev() {
            if i < last {
                g.zip_apply(&cache.pre[i], |gv, z| {
                    if z <= 0.0 {
                        *gv = 0.0;
                    }
                });
            }
            let dw = &g * cache.inputs[i].transpose();
            let db = g.column_sum();
            let gin = self.layers[i].w.tr_mul(&g);
            grads.push((dw, db));
            g = gin;
        }
        grads.reverse();
        (MlpGrads { layers: grads }, g)
    }

    /// `self <- (1 - tau) self + tau source`.
    pub fn soft_update(&mut self, source: &Mlp, tau: f64) {
        for (t, s) in self.layers.iter_mut().zip(&source.layers) {
            t.w.zip_apply(&s.w, |a, b| *a = (1.0 - tau) * *a + tau * b);
            t.b.zip_apply(&s.b, |a, b| *a = (1.0 - tau) * *a + tau * b);
        }
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }
}

fn affine(l: &Dense, h: &DMatrix<f64>) -> DMatrix<f64> {
    let mut z = &l.w * h;
    for mut col in z.column_iter_mut() {
        col += &l.b;
    }
    z
}

impl MlpGrads {
    fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|(w, b)| w.iter().chain(b.iter()))
    }
}

/// Adam state for one network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self { lr, m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &MlpGrads) {
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t);
        let bc2 = 1.0 - BETA2.powi(self.t);
        for (((p, g), m), v) in net.params_mut().zip(grads.iter()).zip(&mut self.m).zip(&mut self.v) {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= self.lr * (*m / bc1) / ((*v / bc2).sqrt() + EPS);
        }
    }

    /// One Adam step on a scalar parameter.
    pub fn step_scalar(&mut self, p: &mut f64, g: f64) {
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t);
        let bc2 = 1.0 - BETA2.powi(self.t);
        self.m[0] = BETA1 * self.m[0] + (1.0 - BETA1) * g;
        self.v[0] = BETA2 * self.v[0] + (1.0 - BETA2) * g * g;
        *p -= self.lr * (self.m[0] / bc1) / ((self.v[0] / bc2).sqrt() + EPS);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn loss(net: &Mlp, x: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
        net.forward(x).component_mul(w).sum()
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut r = rng::seeded(3);
        let net = Mlp::new(&[3, 7, 5, 2], &mut r);
        let x = DMatrix::from_fn(3, 4, |_, _| r.random_range(-1.0..1.0));
        let w = DMatrix::from_fn(2, 4, |_, _| r.random_range(-1.0..1.0));
        let (_, cache) = net.forward_cached(&x);
        let (grads, gx) = net.backward(&cache, &w);
        let analytic: Vec<f64> = grads.iter().copied().collect();
        let h = 1e-6;
        let mut probe = net.clone();
        let n = probe.n_params();
        for k in 0..n {
            let orig = *probe.params_mut().nth(k).unwrap();
            *probe.params_mut().nth(k).unwrap() = orig + h;
            let up = loss(&probe, &x, &w);
            *probe.params_mut().nth(k).unwrap() = orig - h;
            let down = loss(&probe, &x, &w);
            *probe.params_mut().nth(k).unwrap() = orig;
            let fd = (up - down) / (2.0 * h);
            assert!((fd - analytic[k]).abs() < 1e-6 * (1.0 + fd.abs()), "param {k}: {fd} vs {}", analytic[k]);
        }
        for i in 0..3 {
            for j in 0..4 {
                let mut xp = x.clone();
                xp[(i, j)] += h;
                let mut xm = x.clone();
                xm[(i, j)] -= h;
                let fd = (loss(&net, &xp, &w) - loss(&net, &xm, &w)) / (2.0 * h);
                assert!((fd - gx[(i, j)]).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn cached_and_plain_forward_agree() {
        let mut r = rng::seeded(1);
        let net = Mlp::new(&[2, 4, 1], &mut r);
        let x = DMatrix::from_fn(2, 3, |i, j| (i + 2 * j) as f64 * 0.3 - 0.5);
        assert_eq!(net.forward(&x), net.forward_cached(&x).0);
    }

    #[test]
    fn adam_fits_a_line() {
        let mut r = rng::seeded(5);
        let mut net = Mlp::new(&[1, 16, 1], &mut r);
        let mut opt = AdamState::new(net.n_params(), 1e-2);
        let x = DMatrix::from_fn(1, 32, |_, j| j as f64 / 31.0 * 2.0 - 1.0);
        let y = x.map(|v| 3.0 * v - 1.0);
        let mse = |net: &Mlp| (net.forward(&x) - &y).norm_squared() / 32.0;
        let start = mse(&net);
        for _ in 0..500 {
            let (out, cache) = net.forward_cached(&x);
            let g = (out - &y) * (2.0 / 32.0);
            let (grads, _) = net.backward(&cache, &g);
            opt.step(&mut net, &grads);
        }
        assert!(mse(&net) < 1e-2 * start);
    }

    #[test]
    fn soft_update_interpolates() {
        let mut r = rng::seeded(2);
        let a = Mlp::new(&[2, 3, 1], &mut r);
        let b = Mlp::new(&[2, 3, 1], &mut r);
        let mut t = a.clone();
        t.soft_update(&b, 1.0);
        assert_eq!(t, b);
        let mut t = a.clone();
        t.soft_update(&b, 0.0);
        assert_eq!(t, a);
    }
}
