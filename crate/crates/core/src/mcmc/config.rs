use serde::{Deserialize, Serialize};

use super::McmcError;
use crate::linalg::SpdMatrix;
use crate::samplers::TmvnConfig;
use crate::spatial::{CorrelationKind, LocationSet, OrderingKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Non-spatial Gaussian copula (sites independent).
    Bgc,
    /// Full Gaussian-process latent field.
    Spbgc,
    /// Nearest-neighbor Gaussian-process latent field.
    SpbgcNngp,
}

impl SamplerKind {
    pub fn is_spatial(&self) -> bool {
        !matches!(self, SamplerKind::Bgc)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::Bgc => "bgc",
            SamplerKind::Spbgc => "spbgc",
            SamplerKind::SpbgcNngp => "spbgc_nngp",
        }
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "bgc" => Ok(Self::Bgc),
            "spbgc" => Ok(Self::Spbgc),
            "spbgc_nngp" | "spbgcnngp" | "nngp" => Ok(Self::SpbgcNngp),
            other => Err(format!("unknown sampler '{other}'")),
        }
    }
}

/// `V ~ IW(v0, v0·V0)` and `φ ~ Uniform(φ_min, φ_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorConfig {
    pub v0: f64,
    pub v0_scale: SpdMatrix,
    pub phi_min: f64,
    pub phi_max: f64,
}

impl PriorConfig {
    /// `IW(p + 2, (p + 2) I)`; the φ range is `[0.01·d_max, d_max]` when
    /// locations are available and `[0.01, 1]` otherwise.
    pub fn default_for(p: usize, locs: Option<&LocationSet>) -> Self {
        let d_max = locs.map(LocationSet::max_distance).filter(|d| *d > 0.0).unwrap_or(1.0);
        Self {
            v0: p as f64 + 2.0,
            v0_scale: SpdMatrix::identity(p),
            phi_min: 0.01 * d_max,
            phi_max: d_max,
        }
    }

    pub fn validate(&self, p: usize) -> Result<(), McmcError> {
        if self.v0_scale.dim() != p {
            return Err(McmcError::InvalidConfig(format!(
                "prior scale is {}x{}, expected {p}x{p}",
                self.v0_scale.dim(),
                self.v0_scale.dim()
            )));
        }
        if !(self.v0 > p as f64 - 1.0) {
            return Err(McmcError::InvalidConfig(format!(
                "v0 = {} must exceed p - 1 = {}",
                self.v0,
                p as f64 - 1.0
            )));
        }
        if !(self.phi_min > 0.0 && self.phi_min < self.phi_max && self.phi_max.is_finite()) {
            return Err(McmcError::InvalidConfig(format!(
                "need 0 < phi_min < phi_max, got [{}, {}]",
                self.phi_min, self.phi_max
            )));
        }
        Ok(())
    }

    /// `φ` at which chains start: the geometric mean of the prior bounds.
    pub fn initial_phi(&self) -> f64 {
        (self.phi_min * self.phi_max).sqrt()
    }

    pub fn phi_in_support(&self, phi: f64) -> bool {
        self.phi_min <= phi && phi <= self.phi_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
    /// Neighbor budget (NNGP only).
    pub m: usize,
    pub corr_kind: CorrelationKind,
    pub ordering: OrderingKind,
    /// Disable to hold `φ` at its initial value.
    pub update_phi: bool,
    /// Overrides the prior-derived starting value of `φ`.
    pub initial_phi: Option<f64>,
    /// Random-walk step on `log φ` before adaptation.
    pub initial_step: f64,
    /// Robbins-Monro step adaptation during burn-in.
    pub adapt: bool,
    pub tmvn: TmvnConfig,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 3000,
            burn_in: 1000,
            thin: 1,
            seed: 1,
            sampler: SamplerKind::Spbgc,
            m: 15,
            corr_kind: CorrelationKind::Exponential,
            ordering: OrderingKind::Input,
            update_phi: true,
            initial_phi: None,
            initial_step: 0.5,
            adapt: true,
            tmvn: TmvnConfig::default(),
        }
    }
}

impl ChainConfig {
    /// 25 000 iterations, 5 000 burn-in, every 10th draw kept.
    pub fn long_run() -> Self {
        Self {
            iterations: 25_000,
            burn_in: 5_000,
            thin: 10,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), McmcError> {
        if self.burn_in >= self.iterations {
            return Err(McmcError::InvalidConfig(format!(
                "burn_in ({}) must be below iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(McmcError::InvalidConfig("thin must be at least 1".into()));
        }
        if self.sampler == SamplerKind::SpbgcNngp && self.m == 0 {
            return Err(McmcError::InvalidConfig("m must be at least 1".into()));
        }
        if !(self.initial_step > 0.0) {
            return Err(McmcError::InvalidConfig("initial_step must be positive".into()));
        }
        if let Some(phi) = self.initial_phi {
            if !(phi > 0.0 && phi.is_finite()) {
                return Err(McmcError::InvalidConfig(format!("initial_phi {phi} must be positive")));
            }
        }
        Ok(())
    }

    /// Number of draws kept after burn-in and thinning.
    pub fn kept_draws(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}
