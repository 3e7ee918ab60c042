//! TOML run and scenario files.
//!
//! Both carry `format_version = 1`. The config digest is the SHA-256 of the
//! format tag followed by the JSON form of the parsed file, so formatting and
//! comments do not change it but every setting does.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{read_to_string, IoError};
use crate::linalg::SpdMatrix;
use crate::mcmc::{ChainConfig, PriorConfig, SamplerKind};
use crate::rank::ColumnKind;
use crate::samplers::TmvnConfig;
use crate::spatial::{CorrelationKind, LocationSet, OrderingKind};
use crate::synthetic::{MarginalSpec, ScenarioSpec};

pub const FORMAT_VERSION: u32 = 1;
const DIGEST_TAG: &str = "spgcop-config-v1";

fn default_version() -> u32 {
    FORMAT_VERSION
}

fn check_version(v: u32) -> Result<(), IoError> {
    if v != FORMAT_VERSION {
        return Err(IoError::Config(format!(
            "format_version {v} is not supported (expected {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Chain settings as written in a file; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub sampler: Option<SamplerKind>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub seed: Option<u64>,
    pub m: Option<usize>,
    pub chains: Option<usize>,
    pub correlation: Option<CorrelationKind>,
    pub ordering: Option<OrderingKind>,
    pub update_phi: Option<bool>,
    pub initial_phi: Option<f64>,
    pub initial_step: Option<f64>,
    pub adapt: Option<bool>,
    pub tmvn_max_trials: Option<usize>,
    pub tmvn_gibbs_sweeps: Option<usize>,
}

impl ChainSection {
    /// Fills unset fields from `base`.
    pub fn resolve(&self, base: &ChainConfig) -> ChainConfig {
        ChainConfig {
            iterations: self.iterations.unwrap_or(base.iterations),
            burn_in: self.burn_in.unwrap_or(base.burn_in),
            thin: self.thin.unwrap_or(base.thin),
            seed: self.seed.unwrap_or(base.seed),
            sampler: self.sampler.unwrap_or(base.sampler),
            m: self.m.unwrap_or(base.m),
            corr_kind: self.correlation.unwrap_or(base.corr_kind),
            ordering: self.ordering.unwrap_or(base.ordering),
            update_phi: self.update_phi.unwrap_or(base.update_phi),
            initial_phi: self.initial_phi.or(base.initial_phi),
            initial_step: self.initial_step.unwrap_or(base.initial_step),
            adapt: self.adapt.unwrap_or(base.adapt),
            tmvn: TmvnConfig {
                max_trials: self.tmvn_max_trials.unwrap_or(base.tmvn.max_trials),
                gibbs_sweeps: self.tmvn_gibbs_sweeps.unwrap_or(base.tmvn.gibbs_sweeps),
                ..base.tmvn
            },
        }
    }
}

/// Prior settings; unset fields take the defaults for the data at hand.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub v0: Option<f64>,
    pub phi_min: Option<f64>,
    pub phi_max: Option<f64>,
}

impl PriorSection {
    pub fn resolve(&self, p: usize, locs: Option<&LocationSet>) -> PriorConfig {
        let base = PriorConfig::default_for(p, locs);
        PriorConfig {
            v0: self.v0.unwrap_or(base.v0),
            v0_scale: SpdMatrix::identity(p),
            phi_min: self.phi_min.unwrap_or(base.phi_min),
            phi_max: self.phi_max.unwrap_or(base.phi_max),
        }
    }
}

/// Where the data of a fit come from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    /// CSV file with a header row.
    pub csv: Option<PathBuf>,
    /// Scenario file; the dataset of `replication` is generated.
    pub scenario: Option<PathBuf>,
    #[serde(default)]
    pub replication: usize,
    /// Outcome columns to read, in order.
    #[serde(default)]
    pub columns: Vec<ColumnSpec>,
    /// Names of the two coordinate columns.
    #[serde(default)]
    pub location_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub input: InputSection,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub prior: PriorSection,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, IoError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| IoError::Config(e.to_string()))?;
        check_version(cfg.format_version)?;
        Ok(cfg)
    }

    /// Reads a run file; relative input paths are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let mut cfg = Self::from_toml_str(&read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.input.csv, &mut cfg.input.scenario].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), IoError> {
        check_version(self.format_version)?;
        match (&self.input.csv, &self.input.scenario) {
            (Some(_), Some(_)) => {
                return Err(IoError::Config(
                    "give either input.csv or input.scenario, not both".into(),
                ))
            }
            (None, None) => return Err(IoError::Config("input.csv or input.scenario is required".into())),
            (Some(_), None) => {
                if self.input.columns.is_empty() {
                    return Err(IoError::Config(
                        "input.columns must list at least one outcome column".into(),
                    ));
                }
                let spatial = self
                    .chain
                    .sampler
                    .unwrap_or(ChainConfig::default().sampler)
                    .is_spatial();
                if spatial && self.input.location_columns.len() != 2 {
                    return Err(IoError::Config(format!(
                        "spatial samplers need exactly two location_columns, got {}",
                        self.input.location_columns.len()
                    )));
                }
                if !spatial && !matches!(self.input.location_columns.len(), 0 | 2) {
                    return Err(IoError::Config("location_columns must name zero or two columns".into()));
                }
            }
            (None, Some(_)) => {}
        }
        Ok(())
    }

    /// CSV fits default to the long protocol (25 000 iterations, 5 000
    /// burn-in, thin 10); scenario fits to the simulation protocol.
    pub fn chain_config(&self) -> ChainConfig {
        let base = if self.input.csv.is_some() {
            ChainConfig::long_run()
        } else {
            ChainConfig::default()
        };
        self.chain.resolve(&base)
    }

    pub fn chains(&self) -> usize {
        self.chain.chains.unwrap_or(1).max(1)
    }

    /// Digest of every setting except `output_dir`, so the same run written
    /// to two places can still be pooled.
    pub fn digest(&self) -> String {
        digest_of(&RunConfig {
            output_dir: None,
            ..self.clone()
        })
    }
}

fn digest_of<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("configuration serializes to JSON");
    let mut h = Sha256::new();
    h.update(DIGEST_TAG.as_bytes());
    h.update(b"\n");
    h.update(json.as_bytes());
    hex::encode(h.finalize())
}

/// A correlation entry of a scenario file, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Scenario file: either the built-in mixed-margin design with `p` columns
/// (`design = true`) or explicit `marginals` and `correlations`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub name: String,
    pub n: usize,
    pub phi: f64,
    #[serde(default)]
    pub correlation: CorrelationKind,
    #[serde(default)]
    pub design: bool,
    pub p: Option<usize>,
    #[serde(default)]
    pub marginals: Vec<MarginalSpec>,
    #[serde(default)]
    pub correlations: Vec<CorrelationEntry>,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default = "one_u64")]
    pub seed: u64,
    /// Samplers fitted to each replication.
    #[serde(default = "all_methods")]
    pub methods: Vec<SamplerKind>,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub prior: PriorSection,
}

fn one() -> usize {
    1
}

fn one_u64() -> u64 {
    1
}

fn all_methods() -> Vec<SamplerKind> {
    vec![SamplerKind::Bgc, SamplerKind::Spbgc, SamplerKind::SpbgcNngp]
}

impl ScenarioFile {
    pub fn from_toml_str(text: &str) -> Result<Self, IoError> {
        let s: ScenarioFile = toml::from_str(text).map_err(|e| IoError::Config(e.to_string()))?;
        check_version(s.format_version)?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        Self::from_toml_str(&read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes to TOML")
    }

    /// The scenario with the design filled in and indices made 0-based.
    pub fn spec(&self) -> Result<ScenarioSpec, IoError> {
        let mut spec = if self.design {
            let p = self
                .p
                .ok_or_else(|| IoError::Config("design scenarios need p".into()))?;
            ScenarioSpec::design(p, self.n, self.phi)
        } else {
            if self.marginals.is_empty() {
                return Err(IoError::Config("scenario needs marginals or design = true".into()));
            }
            if let Some(p) = self.p {
                if p != self.marginals.len() {
                    return Err(IoError::Config(format!(
                        "p = {p} but {} marginals",
                        self.marginals.len()
                    )));
                }
            }
            let mut correlations = Vec::with_capacity(self.correlations.len());
            for c in &self.correlations {
                if c.i == 0 || c.j == 0 || c.i == c.j {
                    return Err(IoError::Config(format!(
                        "correlation indices ({}, {}) must be distinct and 1-based",
                        c.i, c.j
                    )));
                }
                let (a, b) = (c.i.min(c.j) - 1, c.i.max(c.j) - 1);
                correlations.push((a, b, c.value));
            }
            ScenarioSpec {
                name: String::new(),
                n: self.n,
                phi: self.phi,
                corr_kind: self.correlation,
                correlations,
                marginals: self.marginals.clone(),
                replications: 1,
                seed: 1,
            }
        };
        spec.name = self.name.clone();
        spec.corr_kind = self.correlation;
        spec.replications = self.replications;
        spec.seed = self.seed;
        spec.validate()?;
        if self.methods.is_empty() {
            return Err(IoError::Config("methods must name at least one sampler".into()));
        }
        Ok(spec)
    }

    /// Chain settings for the simulation protocol: 3000 iterations, the
    /// first 1000 discarded.
    pub fn chain_config(&self) -> ChainConfig {
        self.chain.resolve(&ChainConfig::default())
    }

    pub fn digest(&self) -> String {
        digest_of(self)
    }
}
