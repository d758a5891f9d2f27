//! Bayesian posterior computation for Poisson INGARCH(1,1) count time series.
//!
//! The central object is a state-dependent Gaussian proposal for the
//! autoregressive coefficients `(alpha0, alpha1, beta1)`. It is derived by
//! approximating each Poisson term with a negative binomial whose shape `r_t`
//! is chosen to keep the Poisson/NB discrepancy below a tolerance, writing the
//! NB likelihood as a Pólya-Gamma scale mixture, and replacing the latent
//! Pólya-Gamma variables by their conditional means. Softplus intensities are
//! handled through a first-order linearization of `log lambda_t`.
//!
//! The proposal is used by
//! - [`mh`]: a Metropolis-Hastings sampler calibrated by the exact Poisson
//!   likelihood, and
//! - [`psais`]: an adaptive importance sampler with Pareto-smoothed weights.
//!
//! [`inference`] holds the maximum-likelihood baseline and the usual
//! diagnostics (ESS, ACF, residuals, forecast scores).

pub mod error;
pub mod inference;
pub mod io;
pub mod mh;
pub mod model;
pub mod nb;
pub mod polya_gamma;
pub mod proposal;
pub mod psais;
pub mod special;

pub use error::{Error, Result};
pub use model::{CountSeries, IntensityPath, ModelSpec, Params};

/// Length-3 coefficient vector `(alpha0, alpha1, beta1)`.
pub type Theta = nalgebra::Vector3<f64>;
