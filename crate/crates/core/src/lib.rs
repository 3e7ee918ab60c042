//! Bayesian inference of the dependence structure among spatially
//! correlated mixed-type outcomes, using the extended rank likelihood under
//! a latent separable Gaussian process.

// `!(x > y)` is used on purpose: it is also true when either side is NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod harness;
pub mod io;
pub mod linalg;
pub mod mcmc;
pub mod metrics;
pub mod rank;
pub mod samplers;
pub mod spatial;
pub mod synthetic;
