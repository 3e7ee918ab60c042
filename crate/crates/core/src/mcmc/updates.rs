use nalgebra::DMatrix;
use rand::Rng;

use super::field::{LatentField, SpatialFactor};
use super::{McmcError, PriorConfig};
use crate::linalg::{cholesky, CholeskyFactor, SpdMatrix};
use crate::rank::RankStructure;
use crate::samplers::{rwmh_step_from, sample_inverse_wishart, RwmhState, TmvnPath, TmvnSampler, TruncationBox};
use crate::spatial::{CorrelationFunction, LocationSet};

/// Counts from one sweep over the sites.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub sites: usize,
    pub gibbs_fallbacks: usize,
}

/// One sweep of `z_i | z_{-i}, R, φ, rank constraints` over all sites, in
/// index order, using whatever conditionals `field` provides.
pub fn update_z<G: Rng + ?Sized>(
    z: &mut DMatrix<f64>,
    r: &SpdMatrix,
    ranks: &RankStructure,
    field: &LatentField,
    tmvn: &TmvnSampler,
    rng: &mut G,
) -> Result<SweepStats, McmcError> {
    let (n, p) = z.shape();
    if r.dim() != p || ranks.p() != p {
        return Err(McmcError::InvalidConfig(format!(
            "latent matrix has {p} columns but R is {}x{} and the data have {}",
            r.dim(),
            r.dim(),
            ranks.p()
        )));
    }
    let mut stats = SweepStats::default();
    let mut mean = vec![0.0; p];
    let mut lower = vec![0.0; p];
    let mut upper = vec![0.0; p];
    let mut current = vec![0.0; p];
    for i in 0..n {
        ranks.site_bounds(i, z, &mut lower, &mut upper);
        let var = field.site_moments(z, i, &mut mean);
        for j in 0..p {
            current[j] = z[(i, j)];
        }
        let bx = TruncationBox::new(lower.clone(), upper.clone())?;
        let start = bx.contains_strictly(&current).then_some(current.as_slice());
        let draw = tmvn.sample(&mean, &r.scaled(var), &bx, start, rng)?;
        if draw.path == TmvnPath::GibbsFallback {
            stats.gibbs_fallbacks += 1;
        }
        for j in 0..p {
            z[(i, j)] = draw.x[j];
        }
        stats.sites += 1;
    }
    Ok(stats)
}

/// `z` sweep under the full Gaussian process.
pub fn update_z_full<G: Rng + ?Sized>(
    z: &mut DMatrix<f64>,
    r: &SpdMatrix,
    ranks: &RankStructure,
    field: &LatentField,
    tmvn: &TmvnSampler,
    rng: &mut G,
) -> Result<SweepStats, McmcError> {
    if !matches!(field.factor(), SpatialFactor::Full(_)) {
        return Err(McmcError::InvalidConfig("update_z_full needs a full GP field".into()));
    }
    update_z(z, r, ranks, field, tmvn, rng)
}

/// `z` sweep under the NNGP approximation.
pub fn update_z_nngp<G: Rng + ?Sized>(
    z: &mut DMatrix<f64>,
    r: &SpdMatrix,
    ranks: &RankStructure,
    field: &LatentField,
    tmvn: &TmvnSampler,
    rng: &mut G,
) -> Result<SweepStats, McmcError> {
    if !matches!(field.factor(), SpatialFactor::Nngp(_)) {
        return Err(McmcError::InvalidConfig("update_z_nngp needs an NNGP field".into()));
    }
    update_z(z, r, ranks, field, tmvn, rng)
}

/// `V ~ IW(v0 + n, v0·V0 + WᵀW)` and `R = cov2cor(V)`, where `W` are the
/// whitened latent rows.
pub fn update_r<G: Rng + ?Sized>(
    whitened: &DMatrix<f64>,
    prior: &PriorConfig,
    rng: &mut G,
) -> Result<(SpdMatrix, SpdMatrix), McmcError> {
    let n = whitened.nrows() as f64;
    let scale = prior.v0_scale.as_matrix() * prior.v0 + whitened.tr_mul(whitened);
    let v = sample_inverse_wishart(prior.v0 + n, &SpdMatrix::from_symmetric(scale), rng)?;
    let r = v.to_correlation();
    Ok((v, r))
}

/// `log π(φ | z, R)` up to a constant, on the `log φ` scale (so including the
/// Jacobian `+ log φ`), with a uniform prior on `[φ_min, φ_max]`.
pub fn phi_log_target(
    factor: &SpatialFactor,
    z: &DMatrix<f64>,
    r_chol: &CholeskyFactor,
    phi: f64,
    prior: &PriorConfig,
) -> f64 {
    if !prior.phi_in_support(phi) {
        return f64::NEG_INFINITY;
    }
    let p = z.ncols() as f64;
    let w = factor.whiten(z);
    // tr(R⁻¹ WᵀW) = ‖W L_R⁻ᵀ‖²: solve each row of W against L_R
    let mut quad = 0.0;
    let mut row = vec![0.0; z.ncols()];
    for i in 0..w.nrows() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = w[(i, j)];
        }
        r_chol.solve_lower_in_place(&mut row);
        quad += row.iter().map(|v| v * v).sum::<f64>();
    }
    -0.5 * p * factor.log_det() - 0.5 * quad + phi.ln()
}

/// One random-walk Metropolis step on `log φ`; on acceptance the field cache
/// is rebuilt at the new range.
pub fn update_phi<G: Rng + ?Sized>(
    walk: &RwmhState,
    field: &mut LatentField,
    locs: &LocationSet,
    z: &DMatrix<f64>,
    r: &SpdMatrix,
    prior: &PriorConfig,
    rng: &mut G,
) -> Result<RwmhState, McmcError> {
    let r_chol = cholesky(r)?;
    let phi = walk.current.exp();
    let current = phi_log_target(field.factor(), z, &r_chol, phi, prior);
    let mut proposal: Option<Result<(CorrelationFunction, SpatialFactor), McmcError>> = None;
    let (next, _) = rwmh_step_from(
        walk,
        current,
        |log_phi| {
            let phi = log_phi.exp();
            if !prior.phi_in_support(phi) {
                return f64::NEG_INFINITY;
            }
            match field.propose(locs, phi) {
                Ok((corr, factor)) => {
                    let t = phi_log_target(&factor, z, &r_chol, phi, prior);
                    proposal = Some(Ok((corr, factor)));
                    t
                }
                Err(e) => {
                    proposal = Some(Err(e));
                    f64::NEG_INFINITY
                }
            }
        },
        rng,
    );
    if let Some(Err(e)) = &proposal {
        return Err(e.clone());
    }
    if next.accepted > walk.accepted {
        if let Some(Ok((corr, factor))) = proposal {
            field.accept(locs, corr, factor)?;
        }
    }
    Ok(next)
}
