//! Gibbs samplers for the (spatial) Gaussian copula.
//!
//! Each iteration updates the latent matrix `z` site by site, then the
//! correlation matrix `R`, then (spatial samplers only) the range `φ`.

mod chain;
mod config;
mod field;
mod updates;

pub use chain::{run_chain, PhaseTimings, PosteriorDraws};
pub use config::{ChainConfig, PriorConfig, SamplerKind};
pub use field::{LatentField, SpatialFactor};
pub use updates::{phi_log_target, update_phi, update_r, update_z, update_z_full, update_z_nngp, SweepStats};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::{LinalgError, SpdMatrix};
use crate::rank::{MixedOutcomeMatrix, RankError, RankStructure};
use crate::samplers::{SamplerError, TmvnError};
use crate::spatial::SpatialError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McmcError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sampler '{0}' needs site locations")]
    MissingLocations(SamplerKind),
    #[error("{locations} locations for {rows} data rows")]
    LocationCount { locations: usize, rows: usize },
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Tmvn(#[from] TmvnError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Current values of the chain's unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationState {
    pub z: DMatrix<f64>,
    /// Unidentified covariance from the latest `R` update.
    pub v: SpdMatrix,
    pub r: SpdMatrix,
    /// `None` for non-spatial samplers.
    pub phi: Option<f64>,
}

/// Starting state: normal scores for `z`, `R = V = I`.
pub fn init_state(y: &MixedOutcomeMatrix, ranks: &RankStructure, phi: Option<f64>) -> CorrelationState {
    let p = y.p();
    CorrelationState {
        z: ranks.normal_scores(y.n()),
        v: SpdMatrix::identity(p),
        r: SpdMatrix::identity(p),
        phi,
    }
}
