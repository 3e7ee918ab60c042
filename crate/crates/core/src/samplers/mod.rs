//! Random-variate kernels and the chain RNG.

mod rwmh;
mod tmvn;
pub mod truncnorm;
mod wishart;

pub use rwmh::{rwmh_step, rwmh_step_from, RwmhState, TARGET_ACCEPTANCE};
pub use tmvn::{sample_tmvn, TmvnConfig, TmvnDraw, TmvnError, TmvnPath, TmvnSampler, TruncationBox};
pub use wishart::sample_inverse_wishart;

use rand::SeedableRng;
use thiserror::Error;

/// RNG owned by one chain. ChaCha keeps streams identical across platforms.
pub type ChainRng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> ChainRng {
    ChainRng::seed_from_u64(seed)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("degrees of freedom {df} must exceed dim - 1 = {}", *dim as f64 - 1.0)]
    InvalidDegreesOfFreedom { df: f64, dim: usize },
    #[error("degenerate draw")]
    Degenerate,
    #[error(transparent)]
    Tmvn(#[from] TmvnError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}
