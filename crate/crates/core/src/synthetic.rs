//! Simulated datasets: uniform locations on the unit square, a latent field
//! `z ~ N(0, H(φ) ⊗ R)`, and outcomes `y_ij = F_j⁻¹(Φ(z_ij))`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::linalg::{cholesky, LinalgError, SpdMatrix};
use crate::rank::{ColumnKind, MixedOutcomeMatrix, RankError};
use crate::spatial::{build_h, CorrelationFunction, CorrelationKind, LocationSet, SpatialError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyntheticError {
    #[error("probability {0} is outside (0, 1)")]
    InvalidProbability(f64),
    #[error("invalid marginal: {0}")]
    InvalidMarginal(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// Marginal distribution of one outcome column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalSpec {
    Bernoulli {
        p: f64,
    },
    Poisson {
        lambda: f64,
    },
    /// Levels `1..=probs.len()`.
    OrderedCategorical {
        probs: Vec<f64>,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
}

impl MarginalSpec {
    pub fn standard_normal() -> Self {
        MarginalSpec::Normal { mean: 0.0, sd: 1.0 }
    }

    pub fn column_kind(&self) -> ColumnKind {
        match self {
            MarginalSpec::Bernoulli { .. } => ColumnKind::Binary,
            MarginalSpec::Poisson { .. } => ColumnKind::Count,
            MarginalSpec::OrderedCategorical { .. } => ColumnKind::Ordinal,
            MarginalSpec::Normal { .. } => ColumnKind::Continuous,
        }
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        let bad = |msg: String| Err(SyntheticError::InvalidMarginal(msg));
        match self {
            MarginalSpec::Bernoulli { p } if !(0.0..=1.0).contains(p) => bad(format!("bernoulli p = {p}")),
            MarginalSpec::Poisson { lambda } if !(*lambda > 0.0 && lambda.is_finite()) => {
                bad(format!("poisson lambda = {lambda}"))
            }
            MarginalSpec::OrderedCategorical { probs } => {
                if probs.is_empty() || probs.iter().any(|q| !(0.0..=1.0).contains(q)) {
                    return bad(format!("category probabilities {probs:?}"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("category probabilities sum to {total}"));
                }
                Ok(())
            }
            MarginalSpec::Normal { mean, sd } if !(mean.is_finite() && *sd > 0.0 && sd.is_finite()) => {
                bad(format!("normal({mean}, {sd})"))
            }
            _ => Ok(()),
        }
    }
}

/// Generalized inverse CDF: the smallest support point `v` with `F(v) ≥ u`
/// for discrete margins, the exact quantile for the normal.
pub fn quantile(spec: &MarginalSpec, u: f64) -> Result<f64, SyntheticError> {
    if !(u > 0.0 && u < 1.0) {
        return Err(SyntheticError::InvalidProbability(u));
    }
    spec.validate()?;
    Ok(match spec {
        MarginalSpec::Bernoulli { p } => {
            if u <= 1.0 - p {
                0.0
            } else {
                1.0
            }
        }
        MarginalSpec::Poisson { lambda } => poisson_quantile(*lambda, u),
        MarginalSpec::OrderedCategorical { probs } => {
            let mut cum = 0.0;
            let mut level = probs.len();
            for (k, q) in probs.iter().enumerate() {
                cum += q;
                if cum >= u {
                    level = k + 1;
                    break;
                }
            }
            level as f64
        }
        MarginalSpec::Normal { mean, sd } => mean + sd * Normal::standard().inverse_cdf(u),
    })
}

fn poisson_quantile(lambda: f64, u: f64) -> f64 {
    // log-space pmf recursion so large λ does not underflow at k = 0
    let mut ln_pmf = -lambda;
    let mut cdf = ln_pmf.exp();
    let mut k = 0u64;
    while cdf < u {
        k += 1;
        ln_pmf += lambda.ln() - (k as f64).ln();
        let pmf = ln_pmf.exp();
        if pmf == 0.0 && k as f64 > lambda {
            break;
        }
        cdf += pmf;
    }
    k as f64
}

/// One simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub n: usize,
    pub phi: f64,
    pub corr_kind: CorrelationKind,
    /// Nonzero upper-triangular entries `(j, j', R_jj')`, 0-based, `j < j'`.
    pub correlations: Vec<(usize, usize, f64)>,
    pub marginals: Vec<MarginalSpec>,
    pub replications: usize,
    pub seed: u64,
}

/// Nonzero correlations of the simulation design (0-based).
pub const DESIGN_CORRELATIONS: [(usize, usize, f64); 7] = [
    (0, 1, 0.5),
    (0, 3, 0.3),
    (0, 4, 0.2),
    (1, 2, -0.2),
    (1, 3, -0.3),
    (2, 4, 0.4),
    (3, 4, -0.5),
];

impl ScenarioSpec {
    /// The mixed-margin design with `p` columns: Bernoulli(0.5), Poisson(15),
    /// Poisson(5), a five-level ordinal, then standard normals. Correlations
    /// involving columns beyond `p` are dropped.
    pub fn design(p: usize, n: usize, phi: f64) -> Self {
        let discrete = [
            MarginalSpec::Bernoulli { p: 0.5 },
            MarginalSpec::Poisson { lambda: 15.0 },
            MarginalSpec::Poisson { lambda: 5.0 },
            MarginalSpec::OrderedCategorical {
                probs: vec![0.3, 0.15, 0.1, 0.25, 0.2],
            },
        ];
        let marginals = (0..p)
            .map(|j| discrete.get(j).cloned().unwrap_or_else(MarginalSpec::standard_normal))
            .collect();
        Self {
            name: format!("design_p{p}_n{n}_phi{phi}"),
            n,
            phi,
            corr_kind: CorrelationKind::Exponential,
            correlations: DESIGN_CORRELATIONS.iter().copied().filter(|&(_, b, _)| b < p).collect(),
            marginals,
            replications: 1,
            seed: 1,
        }
    }

    pub fn p(&self) -> usize {
        self.marginals.len()
    }

    /// Embeds the sparse entries into a unit-diagonal matrix and checks it
    /// is positive definite.
    pub fn true_r(&self) -> Result<SpdMatrix, SyntheticError> {
        let p = self.p();
        let mut r = DMatrix::identity(p, p);
        for &(a, b, v) in &self.correlations {
            if a >= p || b >= p || a == b {
                return Err(SyntheticError::InvalidScenario(format!(
                    "correlation entry ({a}, {b}) outside a {p}-column design"
                )));
            }
            if !(v > -1.0 && v < 1.0) {
                return Err(SyntheticError::InvalidScenario(format!(
                    "correlation {v} outside (-1, 1)"
                )));
            }
            r[(a, b)] = v;
            r[(b, a)] = v;
        }
        let r = SpdMatrix::from_symmetric(r);
        cholesky(&r).map_err(|_| SyntheticError::InvalidScenario("true R is not positive definite".into()))?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        if self.n == 0 || self.p() == 0 {
            return Err(SyntheticError::InvalidScenario(
                "need n >= 1 and at least one marginal".into(),
            ));
        }
        CorrelationFunction::new(self.corr_kind, self.phi)?;
        for m in &self.marginals {
            m.validate()?;
        }
        self.true_r().map(|_| ())
    }

    /// Seed of replication `rep`.
    pub fn replication_seed(&self, rep: usize) -> u64 {
        self.seed.wrapping_add(rep as u64)
    }
}

/// One generated dataset together with the latent field behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub y: MixedOutcomeMatrix,
    pub locations: LocationSet,
    pub z: DMatrix<f64>,
    pub true_r: SpdMatrix,
}

/// Locations uniform on `[0, 1]²`, then [`generate_at`].
pub fn generate<G: Rng + ?Sized>(scenario: &ScenarioSpec, rng: &mut G) -> Result<SyntheticDataset, SyntheticError> {
    scenario.validate()?;
    let coords = (0..scenario.n)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let locs = LocationSet::new(coords)?;
    generate_at(scenario, locs, rng)
}

/// Latent field and outcomes at fixed locations.
pub fn generate_at<G: Rng + ?Sized>(
    scenario: &ScenarioSpec,
    locations: LocationSet,
    rng: &mut G,
) -> Result<SyntheticDataset, SyntheticError> {
    scenario.validate()?;
    if locations.len() != scenario.n {
        return Err(SyntheticError::InvalidScenario(format!(
            "{} locations for n = {}",
            locations.len(),
            scenario.n
        )));
    }
    let true_r = scenario.true_r()?;
    let corr = CorrelationFunction::new(scenario.corr_kind, scenario.phi)?;
    let l_h = cholesky(&build_h(&locations, &corr))?;
    let l_r = cholesky(&true_r)?;
    let z = latent_matrix(l_h.l(), l_r.l(), rng);
    let y = outcomes_from_latent(&z, &scenario.marginals)?;
    Ok(SyntheticDataset {
        y,
        locations,
        z,
        true_r,
    })
}

/// `L_H E L_Rᵀ` with `E` iid standard normal.
pub fn latent_matrix<G: Rng + ?Sized>(l_h: &DMatrix<f64>, l_r: &DMatrix<f64>, rng: &mut G) -> DMatrix<f64> {
    let (n, p) = (l_h.nrows(), l_r.nrows());
    let e = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    l_h * e * l_r.transpose()
}

/// `y_ij = F_j⁻¹(Φ(z_ij))`.
pub fn outcomes_from_latent(
    z: &DMatrix<f64>,
    marginals: &[MarginalSpec],
) -> Result<MixedOutcomeMatrix, SyntheticError> {
    if z.ncols() != marginals.len() {
        return Err(SyntheticError::InvalidScenario(format!(
            "{} latent columns for {} marginals",
            z.ncols(),
            marginals.len()
        )));
    }
    let std = Normal::standard();
    let mut values = DMatrix::zeros(z.nrows(), z.ncols());
    for (j, spec) in marginals.iter().enumerate() {
        for i in 0..z.nrows() {
            // keep u inside (0, 1) when Φ rounds to an endpoint
            let u = std.cdf(z[(i, j)]).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
            values[(i, j)] = quantile(spec, u)?;
        }
    }
    let names = (1..=marginals.len()).map(|j| format!("y{j}")).collect();
    Ok(
        MixedOutcomeMatrix::complete(values, marginals.iter().map(MarginalSpec::column_kind).collect())?
            .with_names(names),
    )
}
