//! Site-level structure of the latent field: per-site conditional moments
//! for the `z` sweep, and whitening for the `R` and `φ` updates.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::McmcError;
use crate::linalg::{cholesky, CholeskyFactor, SpdMatrix};
use crate::spatial::{build_h, CorrelationFunction, LocationSet, NeighborGraph, NeighborSets};

/// Factorization of `H(φ)` sufficient to evaluate the `φ` target.
#[derive(Debug, Clone)]
pub enum SpatialFactor {
    /// `H = I`.
    Identity,
    /// Cholesky factor of the full `H`.
    Full(CholeskyFactor),
    /// Nearest-neighbor factors `B_i`, `F_i`.
    Nngp(NeighborGraph),
}

impl SpatialFactor {
    /// `log det H` (exact for the full factor, the NNGP approximation otherwise).
    pub fn log_det(&self) -> f64 {
        match self {
            SpatialFactor::Identity => 0.0,
            SpatialFactor::Full(c) => c.log_det(),
            SpatialFactor::Nngp(g) => g.log_det(),
        }
    }

    /// `W` with `WᵀW = Zᵀ H⁻¹ Z`.
    pub fn whiten(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SpatialFactor::Identity => z.clone(),
            SpatialFactor::Full(c) => c.whiten_columns(z),
            SpatialFactor::Nngp(g) => g.whitened_residuals(z),
        }
    }

    /// `Zᵀ H⁻¹ Z`.
    pub fn scatter(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let w = self.whiten(z);
        w.tr_mul(&w)
    }
}

/// Per-site conditional of `z_i` given all other rows:
/// `z_i | z_{-i} ~ N(Σ_k weight_k z_k, variance · R)`.
#[derive(Debug, Clone)]
enum SiteConditionals {
    Independent,
    /// Precision `Q = H⁻¹`; the weights are `−Q_ik / Q_ii`.
    Precision(DMatrix<f64>),
    /// Weights over the conditioning set `D_i`.
    Local {
        sets: Arc<NeighborSets>,
        weights: Vec<Vec<f64>>,
        variance: Vec<f64>,
        max_factor_dim: usize,
    },
}

/// Cached state of `H(φ)` for the current `φ`.
#[derive(Debug, Clone)]
pub struct LatentField {
    corr: Option<CorrelationFunction>,
    factor: SpatialFactor,
    site: SiteConditionals,
}

impl LatentField {
    /// Sites independent, `H = I`.
    pub fn independent() -> Self {
        Self {
            corr: None,
            factor: SpatialFactor::Identity,
            site: SiteConditionals::Independent,
        }
    }

    /// Full Gaussian process: factorizes and inverts the dense `H`.
    pub fn full(locs: &LocationSet, corr: CorrelationFunction) -> Result<Self, McmcError> {
        let factor = Self::full_factor(locs, &corr)?;
        let mut field = Self {
            corr: Some(corr),
            factor,
            site: SiteConditionals::Independent,
        };
        field.refresh_site_conditionals(locs)?;
        Ok(field)
    }

    /// NNGP with neighbor budget `m`.
    pub fn nngp(locs: &LocationSet, m: usize, corr: CorrelationFunction) -> Result<Self, McmcError> {
        let sets = Arc::new(NeighborSets::build(locs, m)?);
        let graph = NeighborGraph::from_sets(sets, locs, &corr)?;
        let mut field = Self {
            corr: Some(corr),
            factor: SpatialFactor::Nngp(graph),
            site: SiteConditionals::Independent,
        };
        field.refresh_site_conditionals(locs)?;
        Ok(field)
    }

    fn full_factor(locs: &LocationSet, corr: &CorrelationFunction) -> Result<SpatialFactor, McmcError> {
        Ok(SpatialFactor::Full(cholesky(&build_h(locs, corr))?))
    }

    pub fn is_spatial(&self) -> bool {
        self.corr.is_some()
    }

    pub fn correlation(&self) -> Option<&CorrelationFunction> {
        self.corr.as_ref()
    }

    pub fn phi(&self) -> Option<f64> {
        self.corr.map(|c| c.range())
    }

    pub fn factor(&self) -> &SpatialFactor {
        &self.factor
    }

    /// Largest matrix factorized for a single site's conditional; 0 when
    /// the site conditionals come from the global precision.
    pub fn max_site_factor_dim(&self) -> usize {
        match &self.site {
            SiteConditionals::Local { max_factor_dim, .. } => *max_factor_dim,
            _ => 0,
        }
    }

    /// Factor of `H` at a candidate `φ`, without touching the cache.
    pub fn propose(&self, locs: &LocationSet, phi: f64) -> Result<(CorrelationFunction, SpatialFactor), McmcError> {
        let corr = self
            .corr
            .ok_or_else(|| McmcError::InvalidConfig("non-spatial field has no range".into()))?
            .with_range(phi)?;
        let factor = match &self.factor {
            SpatialFactor::Identity => SpatialFactor::Identity,
            SpatialFactor::Full(_) => Self::full_factor(locs, &corr)?,
            SpatialFactor::Nngp(g) => SpatialFactor::Nngp(g.refactor(locs, &corr)?),
        };
        Ok((corr, factor))
    }

    /// Installs an accepted proposal and rebuilds the site conditionals.
    pub fn accept(
        &mut self,
        locs: &LocationSet,
        corr: CorrelationFunction,
        factor: SpatialFactor,
    ) -> Result<(), McmcError> {
        self.corr = Some(corr);
        self.factor = factor;
        self.refresh_site_conditionals(locs)
    }

    fn refresh_site_conditionals(&mut self, locs: &LocationSet) -> Result<(), McmcError> {
        self.site = match &self.factor {
            SpatialFactor::Identity => SiteConditionals::Independent,
            SpatialFactor::Full(c) => SiteConditionals::Precision(c.inverse().into_inner()),
            SpatialFactor::Nngp(g) => {
                let corr = g.correlation();
                let sets = g.shared_sets();
                let n = sets.len();
                let mut weights = Vec::with_capacity(n);
                let mut variance = Vec::with_capacity(n);
                let mut max_factor_dim = 0;
                for i in 0..n {
                    let d = sets.conditioning_set(i);
                    max_factor_dim = max_factor_dim.max(d.len());
                    if d.is_empty() {
                        weights.push(Vec::new());
                        variance.push(1.0);
                        continue;
                    }
                    let h_dd = SpdMatrix::from_symmetric(DMatrix::from_fn(d.len(), d.len(), |r, c| {
                        corr.between(locs, d[r], d[c])
                    }));
                    let h_id: Vec<f64> = d.iter().map(|&k| corr.between(locs, i, k)).collect();
                    let w = cholesky(&h_dd)?.solve(&h_id);
                    let explained: f64 = w.iter().zip(&h_id).map(|(a, b)| a * b).sum();
                    weights.push(w);
                    variance.push((1.0 - explained).max(f64::EPSILON));
                }
                SiteConditionals::Local {
                    sets,
                    weights,
                    variance,
                    max_factor_dim,
                }
            }
        };
        Ok(())
    }

    /// Conditional mean of row `i` (written to `mean`) and the scalar
    /// `σ²_i` with `Cov(z_i | ·) = σ²_i R`.
    pub fn site_moments(&self, z: &DMatrix<f64>, i: usize, mean: &mut [f64]) -> f64 {
        let n = z.nrows();
        match &self.site {
            SiteConditionals::Independent => {
                mean.iter_mut().for_each(|m| *m = 0.0);
                1.0
            }
            SiteConditionals::Precision(q) => {
                let qi = &q.as_slice()[i * n..(i + 1) * n];
                let qii = qi[i];
                for (j, m) in mean.iter_mut().enumerate() {
                    let zj = &z.as_slice()[j * n..(j + 1) * n];
                    let dot: f64 = qi.iter().zip(zj).map(|(a, b)| a * b).sum();
                    *m = -(dot - qii * zj[i]) / qii;
                }
                1.0 / qii
            }
            SiteConditionals::Local {
                sets,
                weights,
                variance,
                ..
            } => {
                let d = sets.conditioning_set(i);
                let w = &weights[i];
                for (j, m) in mean.iter_mut().enumerate() {
                    let zj = &z.as_slice()[j * n..(j + 1) * n];
                    *m = d.iter().zip(w).map(|(&k, wk)| wk * zj[k]).sum();
                }
                variance[i]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::conditional_normal;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_locs(n: usize, seed: u64) -> LocationSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LocationSet::new((0..n).map(|_| [rng.random(), rng.random()]).collect()).unwrap()
    }

    fn random_z(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn precision_moments_match_schur_complement() {
        let locs = random_locs(8, 1);
        let corr = CorrelationFunction::exponential(0.3).unwrap();
        let field = LatentField::full(&locs, corr).unwrap();
        let h = build_h(&locs, &corr);
        let z = random_z(8, 3, 2);
        let mut mean = vec![0.0; 3];
        for i in 0..8 {
            let var = field.site_moments(&z, i, &mut mean);
            let others: Vec<usize> = (0..8).filter(|&k| k != i).collect();
            for j in 0..3 {
                let given: Vec<f64> = others.iter().map(|&k| z[(k, j)]).collect();
                let (m, c) = conditional_normal(&h, &[i], &others, &given).unwrap();
                assert_relative_eq!(mean[j], m[0], epsilon = 1e-10);
                assert_relative_eq!(var, c.get(0, 0), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn nngp_with_full_neighbors_matches_full_gp() {
        let locs = random_locs(10, 3);
        let corr = CorrelationFunction::exponential(0.2).unwrap();
        let full = LatentField::full(&locs, corr).unwrap();
        let nngp = LatentField::nngp(&locs, 9, corr).unwrap();
        let z = random_z(10, 2, 4);
        let (mut a, mut b) = (vec![0.0; 2], vec![0.0; 2]);
        for i in 0..10 {
            let va = full.site_moments(&z, i, &mut a);
            let vb = nngp.site_moments(&z, i, &mut b);
            assert_relative_eq!(va, vb, epsilon = 1e-8);
            for j in 0..2 {
                assert_relative_eq!(a[j], b[j], epsilon = 1e-8);
            }
        }
        assert_relative_eq!(full.factor().log_det(), nngp.factor().log_det(), epsilon = 1e-8);
        let sa = full.factor().scatter(&z);
        let sb = nngp.factor().scatter(&z);
        assert!((sa - sb).amax() < 1e-8);
        assert_eq!(nngp.max_site_factor_dim(), 9);
    }

    #[test]
    fn scatter_matches_explicit_inverse() {
        let locs = random_locs(12, 5);
        let corr = CorrelationFunction::exponential(0.4).unwrap();
        let field = LatentField::full(&locs, corr).unwrap();
        let z = random_z(12, 3, 6);
        let hinv = build_h(&locs, &corr).into_inner().try_inverse().unwrap();
        let explicit = z.transpose() * hinv * &z;
        assert!((field.factor().scatter(&z) - explicit).amax() < 1e-9);
    }

    #[test]
    fn small_neighbor_budget_bounds_site_factor() {
        let locs = random_locs(60, 7);
        let corr = CorrelationFunction::exponential(0.1).unwrap();
        let field = LatentField::nngp(&locs, 4, corr).unwrap();
        let sets = NeighborSets::build(&locs, 4).unwrap();
        assert_eq!(field.max_site_factor_dim(), sets.max_conditioning_size());
        assert!(field.max_site_factor_dim() < 60);
    }

    #[test]
    fn independent_moments_are_standard() {
        let field = LatentField::independent();
        let z = random_z(4, 2, 8);
        let mut m = vec![9.0; 2];
        assert_eq!(field.site_moments(&z, 1, &mut m), 1.0);
        assert_eq!(m, vec![0.0, 0.0]);
        assert_eq!(field.factor().scatter(&z), z.tr_mul(&z));
    }

    #[test]
    fn proposal_leaves_cache_untouched() {
        let locs = random_locs(6, 9);
        let corr = CorrelationFunction::exponential(0.3).unwrap();
        let mut field = LatentField::full(&locs, corr).unwrap();
        let before = field.factor().log_det();
        let (c2, f2) = field.propose(&locs, 0.6).unwrap();
        assert_eq!(field.factor().log_det(), before);
        let fresh = LatentField::full(&locs, c2).unwrap();
        field.accept(&locs, c2, f2).unwrap();
        assert_eq!(field.phi(), Some(0.6));
        let z = random_z(6, 2, 10);
        let (mut a, mut b) = (vec![0.0; 2], vec![0.0; 2]);
        assert_eq!(field.site_moments(&z, 2, &mut a), fresh.site_moments(&z, 2, &mut b));
        assert_eq!(a, b);
    }
}
