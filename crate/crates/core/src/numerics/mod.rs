//! Dense numerical core: kernels, Cholesky solves, marginal likelihood,
//! hyperparameter optimization and random Fourier features.

mod cholesky;
mod kernel;
mod likelihood;
mod optimize;
mod rff;

pub use cholesky::{cholesky_solve, factorize, factorize_regularized, CholeskyFactor, JITTER_MAX_REL, JITTER_START_REL};
pub use kernel::{rbf_kernel, rbf_kernel_with_grads, KernelParams, NoiseParam};
pub use likelihood::{nlml, nlml_gradient, nlml_with_gradient};
pub use optimize::{optimize_hyperparams, OptimizerConfig, OptimizerResult};
pub use rff::{make_rff_map, rff_features, RffMap};
