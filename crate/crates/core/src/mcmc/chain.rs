use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use serde::Serialize;

use super::field::LatentField;
use super::updates::{update_phi, update_r, update_z};
use super::{init_state, ChainConfig, McmcError, PriorConfig, SamplerKind};
use crate::linalg::SpdMatrix;
use crate::rank::{MixedOutcomeMatrix, RankStructure};
use crate::samplers::{seeded_rng, RwmhState, TmvnSampler};
use crate::spatial::{CorrelationFunction, LocationSet};

/// Wall-clock seconds spent in each update over the whole chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub z: f64,
    pub r: f64,
    pub phi: f64,
    pub total: f64,
}

/// Output of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub sampler: SamplerKind,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub names: Vec<String>,
    /// Kept draws of `R`, after burn-in and thinning.
    pub r: Vec<SpdMatrix>,
    /// Kept draws of `φ`; `NaN` for the non-spatial sampler.
    pub phi: Vec<f64>,
    /// Iteration index (0-based) of each kept draw.
    pub kept_iterations: Vec<usize>,
    pub iterations_completed: usize,
    /// Set when a kernel failed; the draws up to that point are kept.
    pub aborted: Option<String>,
    pub phi_acceptance: Option<f64>,
    pub phi_step: Option<f64>,
    pub gibbs_fallbacks: u64,
    pub degenerate_columns: Vec<usize>,
    /// Largest per-site conditioning matrix factorized (NNGP only).
    pub max_site_factor_dim: usize,
    pub timings: PhaseTimings,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Trace of `R[a, b]`.
    pub fn correlation_trace(&self, a: usize, b: usize) -> Vec<f64> {
        self.r.iter().map(|m| m.get(a, b)).collect()
    }

    /// Elementwise posterior mean of `R`.
    pub fn mean_r(&self) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.p, self.p);
        for m in &self.r {
            acc += m.as_matrix();
        }
        if !self.r.is_empty() {
            acc /= self.r.len() as f64;
        }
        acc
    }
}

/// Runs one chain. Invalid inputs are reported as errors before sampling
/// starts; a failure inside a kernel stops the chain and is reported through
/// [`PosteriorDraws::aborted`].
pub fn run_chain(
    y: &MixedOutcomeMatrix,
    locs: Option<&LocationSet>,
    prior: &PriorConfig,
    cfg: &ChainConfig,
) -> Result<PosteriorDraws, McmcError> {
    cfg.validate()?;
    let (n, p) = (y.n(), y.p());
    if n == 0 || p == 0 {
        return Err(McmcError::InvalidConfig(format!("data are {n}x{p}")));
    }
    prior.validate(p)?;

    let locs = if cfg.sampler.is_spatial() {
        let l = locs.ok_or(McmcError::MissingLocations(cfg.sampler))?;
        if l.len() != n {
            return Err(McmcError::LocationCount {
                locations: l.len(),
                rows: n,
            });
        }
        Some(l.clone().with_ordering_kind(cfg.ordering))
    } else {
        None
    };

    let ranks = RankStructure::new(y);
    let initial_phi = cfg.initial_phi.unwrap_or_else(|| prior.initial_phi());
    let mut field = match (cfg.sampler, &locs) {
        (SamplerKind::Bgc, _) => LatentField::independent(),
        (SamplerKind::Spbgc, Some(l)) => LatentField::full(l, CorrelationFunction::new(cfg.corr_kind, initial_phi)?)?,
        (SamplerKind::SpbgcNngp, Some(l)) => {
            LatentField::nngp(l, cfg.m, CorrelationFunction::new(cfg.corr_kind, initial_phi)?)?
        }
        _ => unreachable!("spatial samplers have locations"),
    };
    let mut state = init_state(y, &ranks, field.phi());
    let tmvn = TmvnSampler::new(cfg.tmvn);
    let mut rng = seeded_rng(cfg.seed);
    let mut walk = RwmhState::new(initial_phi.ln(), cfg.initial_step);
    let sample_phi = cfg.sampler.is_spatial() && cfg.update_phi;

    let mut out = PosteriorDraws {
        sampler: cfg.sampler,
        seed: cfg.seed,
        n,
        p,
        names: y.names().to_vec(),
        r: Vec::with_capacity(cfg.kept_draws()),
        phi: Vec::with_capacity(cfg.kept_draws()),
        kept_iterations: Vec::with_capacity(cfg.kept_draws()),
        iterations_completed: 0,
        aborted: None,
        phi_acceptance: None,
        phi_step: None,
        gibbs_fallbacks: 0,
        degenerate_columns: ranks.degenerate_columns(),
        max_site_factor_dim: field.max_site_factor_dim(),
        timings: PhaseTimings::default(),
    };
    let (mut tz, mut tr, mut tphi) = (Duration::ZERO, Duration::ZERO, Duration::ZERO);
    let start = Instant::now();

    for it in 0..cfg.iterations {
        let step = (|| -> Result<(), McmcError> {
            let t0 = Instant::now();
            let sweep = update_z(&mut state.z, &state.r, &ranks, &field, &tmvn, &mut rng)?;
            out.gibbs_fallbacks += sweep.gibbs_fallbacks as u64;
            debug_assert!(ranks.is_consistent(&state.z), "latent draw violates rank constraints");
            let t1 = Instant::now();
            tz += t1 - t0;

            let w = field.factor().whiten(&state.z);
            let (v, r) = update_r(&w, prior, &mut rng)?;
            state.v = v;
            state.r = r;
            let t2 = Instant::now();
            tr += t2 - t1;

            if sample_phi {
                let l = locs.as_ref().expect("spatial sampler has locations");
                walk = update_phi(&walk, &mut field, l, &state.z, &state.r, prior, &mut rng)?;
                if cfg.adapt && it < cfg.burn_in {
                    walk.adapt(it);
                }
                state.phi = field.phi();
                tphi += t2.elapsed();
            }
            Ok(())
        })();
        if let Err(e) = step {
            out.aborted = Some(format!("iteration {it}: {e}"));
            break;
        }
        out.iterations_completed = it + 1;
        if it >= cfg.burn_in && (it - cfg.burn_in).is_multiple_of(cfg.thin) {
            out.r.push(state.r.clone());
            out.phi.push(state.phi.unwrap_or(f64::NAN));
            out.kept_iterations.push(it);
        }
    }

    if sample_phi {
        out.phi_acceptance = Some(walk.acceptance_rate());
        out.phi_step = Some(walk.step);
    }
    out.timings = PhaseTimings {
        z: tz.as_secs_f64(),
        r: tr.as_secs_f64(),
        phi: tphi.as_secs_f64(),
        total: start.elapsed().as_secs_f64(),
    };
    Ok(out)
}
