//! Physics-informed probabilistic surrogate models.
//!
//! A crude physics-derived model `f_p(x)` is adjusted toward real observations
//! through a multiplicative scale `rho(x)` and an additive bias `delta(x)`:
//!
//! `f_a(x) = rho(x) * f_p(x) + delta(x)`
//!
//! Two adjustment families are provided:
//!
//! * **CKA** (co-kriging adjustment): Gaussian-process priors on `rho`
//!   (mean 1) and `delta` (mean 0), so predictions revert to `f_p` away from
//!   the data.
//! * **RRA** (ridge regression adjustment): `rho` and `delta` as ridge
//!   regressions over random Fourier features with a Gaussian posterior over
//!   the coefficients.
//!
//! Baselines (zero-mean GP, physics-mean GP, GP-bias, GP-scale and AR1
//! co-kriging) share the same [`surrogates::Surrogate`] contract. The
//! [`control`] module uses the models as learned dynamics inside a Dyna-style
//! soft actor-critic loop, and [`bench`] holds the seeded experiment harness.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod bench;
pub mod control;
pub mod error;
pub mod numerics;
pub mod physics;
pub mod rng;
pub mod surrogates;

pub use error::{Error, Result};
