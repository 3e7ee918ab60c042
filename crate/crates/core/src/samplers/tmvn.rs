//! Truncated multivariate normal draws on an axis-aligned box.
//!
//! The default path is minimax-tilting accept-reject: variables are
//! reordered and factorized, the tilting parameter is found by Newton's
//! method on the saddle-point equations, and proposals from the tilted
//! sequential sampler are accepted against the resulting bound. Each
//! accepted draw is exact. If the saddle point cannot be located or no
//! proposal is accepted within the trial budget, a few sweeps of
//! coordinate-wise Gibbs from the current point are used instead.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use super::truncnorm::{ln_normal_prob, sample_truncated_standard, scaled_density};
use crate::linalg::{cholesky, LinalgError, SpdMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TmvnError {
    #[error("empty truncation interval in dimension {index}: ({lower}, {upper})")]
    EmptyBox { index: usize, lower: f64, upper: f64 },
    #[error("dimension {0} exceeds the accept-reject limit")]
    DimensionTooLarge(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no acceptance within {0} trials")]
    AcceptanceStall(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Open box `lower < x < upper`; infinite endpoints are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TruncationBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, TmvnError> {
        if lower.len() != upper.len() {
            return Err(TmvnError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (index, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) {
                return Err(TmvnError::EmptyBox {
                    index,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains_strictly(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo < v && v < hi)
    }

    fn is_unbounded(&self) -> bool {
        self.lower.iter().all(|v| *v == f64::NEG_INFINITY) && self.upper.iter().all(|v| *v == f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmvnConfig {
    /// Proposals tried before declaring a stall.
    pub max_trials: usize,
    /// Gibbs sweeps used by the fallback.
    pub gibbs_sweeps: usize,
    /// Above this dimension accept-reject is skipped in favor of Gibbs.
    pub max_accept_reject_dim: usize,
    /// Error instead of falling back when the dimension is too large.
    pub force_accept_reject: bool,
}

impl Default for TmvnConfig {
    fn default() -> Self {
        Self {
            max_trials: 500,
            gibbs_sweeps: 10,
            max_accept_reject_dim: 100,
            force_accept_reject: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmvnPath {
    /// Untruncated or one-dimensional: sampled directly.
    Direct,
    /// Minimax-tilting accept-reject, with the number of proposals used.
    AcceptReject(usize),
    GibbsFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TmvnDraw {
    pub x: Vec<f64>,
    pub path: TmvnPath,
}

/// One draw from `N(mean, cov)` restricted to `bx`, using the default
/// configuration and no warm start for the fallback.
pub fn sample_tmvn<R: Rng + ?Sized>(
    mean: &[f64],
    cov: &SpdMatrix,
    bx: &TruncationBox,
    rng: &mut R,
) -> Result<Vec<f64>, TmvnError> {
    TmvnSampler::default().sample(mean, cov, bx, None, rng).map(|d| d.x)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TmvnSampler {
    pub config: TmvnConfig,
}

impl TmvnSampler {
    pub fn new(config: TmvnConfig) -> Self {
        Self { config }
    }

    /// `current`, if strictly inside the box, seeds the Gibbs fallback.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        mean: &[f64],
        cov: &SpdMatrix,
        bx: &TruncationBox,
        current: Option<&[f64]>,
        rng: &mut R,
    ) -> Result<TmvnDraw, TmvnError> {
        let d = mean.len();
        for len in [cov.dim(), bx.dim()] {
            if len != d {
                return Err(TmvnError::DimensionMismatch { expected: d, got: len });
            }
        }
        if d == 0 {
            return Ok(TmvnDraw {
                x: Vec::new(),
                path: TmvnPath::Direct,
            });
        }
        if bx.is_unbounded() {
            let chol = cholesky(cov)?;
            let e: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let x = (0..d)
                .map(|r| mean[r] + (0..=r).map(|c| chol.l()[(r, c)] * e[c]).sum::<f64>())
                .collect();
            return Ok(TmvnDraw {
                x,
                path: TmvnPath::Direct,
            });
        }
        if d == 1 {
            let sd = cov.get(0, 0).sqrt();
            let l = (bx.lower[0] - mean[0]) / sd;
            let u = (bx.upper[0] - mean[0]) / sd;
            for _ in 0..self.config.max_trials.max(1) {
                let x = vec![mean[0] + sd * sample_truncated_standard(l, u, rng)];
                if bx.contains_strictly(&x) {
                    return Ok(TmvnDraw {
                        x,
                        path: TmvnPath::Direct,
                    });
                }
            }
            return self.gibbs(mean, cov, bx, current, rng);
        }
        if d > self.config.max_accept_reject_dim {
            if self.config.force_accept_reject {
                return Err(TmvnError::DimensionTooLarge(d));
            }
            return self.gibbs(mean, cov, bx, current, rng);
        }
        match self.accept_reject(mean, cov, bx, rng)? {
            Some(draw) => Ok(draw),
            None => self.gibbs(mean, cov, bx, current, rng),
        }
    }

    /// `Ok(None)` signals a stall or an unsolved tilting problem.
    fn accept_reject<R: Rng + ?Sized>(
        &self,
        mean: &[f64],
        cov: &SpdMatrix,
        bx: &TruncationBox,
        rng: &mut R,
    ) -> Result<Option<TmvnDraw>, TmvnError> {
        let d = mean.len();
        let l0: Vec<f64> = (0..d).map(|k| bx.lower[k] - mean[k]).collect();
        let u0: Vec<f64> = (0..d).map(|k| bx.upper[k] - mean[k]).collect();
        let Some(problem) = TiltingProblem::new(cov, &l0, &u0) else {
            return Ok(None);
        };
        let Some((tilt, psi_star)) = problem.solve() else {
            return Ok(None);
        };
        let mut z = vec![0.0; d];
        let mut x = vec![0.0; d];
        for trial in 1..=self.config.max_trials {
            let log_p = problem.propose(&tilt, &mut z, rng);
            let e: f64 = rng.random();
            if -e.ln() > psi_star - log_p {
                problem.map_back(&z, mean, &mut x);
                if bx.contains_strictly(&x) {
                    return Ok(Some(TmvnDraw {
                        x,
                        path: TmvnPath::AcceptReject(trial),
                    }));
                }
            }
        }
        Ok(None)
    }

    fn gibbs<R: Rng + ?Sized>(
        &self,
        mean: &[f64],
        cov: &SpdMatrix,
        bx: &TruncationBox,
        current: Option<&[f64]>,
        rng: &mut R,
    ) -> Result<TmvnDraw, TmvnError> {
        let d = mean.len();
        let precision = cholesky(cov)?.inverse();
        let mut x: Vec<f64> = match current {
            Some(c) if bx.contains_strictly(c) => c.to_vec(),
            _ => interior_point(mean, bx),
        };
        for _ in 0..self.config.gibbs_sweeps {
            for k in 0..d {
                let pkk = precision.get(k, k);
                let shift: f64 = (0..d)
                    .filter(|&j| j != k)
                    .map(|j| precision.get(k, j) * (x[j] - mean[j]))
                    .sum();
                let m = mean[k] - shift / pkk;
                let sd = pkk.recip().sqrt();
                let v = m + sd * sample_truncated_standard((bx.lower[k] - m) / sd, (bx.upper[k] - m) / sd, rng);
                if bx.lower[k] < v && v < bx.upper[k] {
                    x[k] = v;
                }
            }
        }
        Ok(TmvnDraw {
            x,
            path: TmvnPath::GibbsFallback,
        })
    }
}

fn interior_point(mean: &[f64], bx: &TruncationBox) -> Vec<f64> {
    mean.iter()
        .zip(bx.lower.iter().zip(&bx.upper))
        .map(|(&m, (&lo, &hi))| {
            if lo < m && m < hi {
                m
            } else if lo.is_finite() && hi.is_finite() {
                lo + 0.5 * (hi - lo)
            } else if lo.is_finite() {
                lo + lo.abs().max(1.0)
            } else {
                hi - hi.abs().max(1.0)
            }
        })
        .collect()
}

/// Reordered, scaled factorization and the saddle-point system for the
/// tilting parameter.
struct TiltingProblem {
    d: usize,
    /// Full lower factor of the permuted covariance.
    l_full: DMatrix<f64>,
    /// Strictly lower part of `L / diag(L)` (row-scaled).
    l: DMatrix<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    perm: Vec<usize>,
}

struct Tilt {
    mu: Vec<f64>,
}

impl TiltingProblem {
    /// Greedy reordering: at each step put first the remaining variable with
    /// the smallest conditional truncation probability.
    fn new(cov: &SpdMatrix, l0: &[f64], u0: &[f64]) -> Option<Self> {
        let d = l0.len();
        let mut sig = cov.as_matrix().clone();
        let mut lo = l0.to_vec();
        let mut hi = u0.to_vec();
        let mut perm: Vec<usize> = (0..d).collect();
        let mut l = DMatrix::<f64>::zeros(d, d);
        let mut z = vec![0.0; d];
        for j in 0..d {
            let mut best = (f64::INFINITY, j);
            for i in j..d {
                let mut s = sig[(i, i)];
                let mut shift = 0.0;
                for c in 0..j {
                    s -= l[(i, c)] * l[(i, c)];
                    shift += l[(i, c)] * z[c];
                }
                let s = s.max(f64::EPSILON).sqrt();
                let pr = ln_normal_prob((lo[i] - shift) / s, (hi[i] - shift) / s);
                if pr < best.0 {
                    best = (pr, i);
                }
            }
            let k = best.1;
            if k != j {
                sig.swap_rows(j, k);
                sig.swap_columns(j, k);
                l.swap_rows(j, k);
                lo.swap(j, k);
                hi.swap(j, k);
                perm.swap(j, k);
            }
            let mut s = sig[(j, j)];
            for c in 0..j {
                s -= l[(j, c)] * l[(j, c)];
            }
            if s < -0.01 {
                return None;
            }
            let ljj = s.max(f64::EPSILON).sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..d {
                let mut v = sig[(i, j)];
                for c in 0..j {
                    v -= l[(i, c)] * l[(j, c)];
                }
                l[(i, j)] = v / ljj;
            }
            let shift: f64 = (0..j).map(|c| l[(j, c)] * z[c]).sum();
            let tl = (lo[j] - shift) / ljj;
            let tu = (hi[j] - shift) / ljj;
            let w = ln_normal_prob(tl, tu);
            z[j] = scaled_density(tl, w) - scaled_density(tu, w);
        }
        let mut scaled = DMatrix::<f64>::zeros(d, d);
        for r in 0..d {
            let dr = l[(r, r)];
            lo[r] /= dr;
            hi[r] /= dr;
            for c in 0..r {
                scaled[(r, c)] = l[(r, c)] / dr;
            }
        }
        Some(Self {
            d,
            l_full: l,
            l: scaled,
            lower: lo,
            upper: hi,
            perm,
        })
    }

    /// Gradient and Jacobian of `ψ` in `y = (x_1..x_{d-1}, μ_1..μ_{d-1})`.
    fn gradient(&self, y: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.d;
        let k = d - 1;
        let mut x = vec![0.0; d];
        let mut mu = vec![0.0; d];
        x[..k].copy_from_slice(&y[..k]);
        mu[..k].copy_from_slice(&y[k..]);
        let mut p = vec![0.0; d];
        let mut dp = vec![0.0; d];
        for r in 0..d {
            let c: f64 = (0..r).map(|j| self.l[(r, j)] * x[j]).sum();
            let lt = self.lower[r] - mu[r] - c;
            let ut = self.upper[r] - mu[r] - c;
            let w = ln_normal_prob(lt, ut);
            let pl = scaled_density(lt, w);
            let pu = scaled_density(ut, w);
            p[r] = pl - pu;
            let lt0 = if lt.is_finite() { lt } else { 0.0 };
            let ut0 = if ut.is_finite() { ut } else { 0.0 };
            dp[r] = -p[r] * p[r] + lt0 * pl - ut0 * pu;
        }
        let mut grad = DVector::zeros(2 * k);
        for j in 0..k {
            let lp: f64 = (0..d).map(|r| p[r] * self.l[(r, j)]).sum();
            grad[j] = -mu[j] + lp;
            grad[k + j] = mu[j] - x[j] + p[j];
        }
        // J = [[Lᵀ diag(dP) L, mxᵀ], [mx, diag(1 + dP)]] restricted to the
        // first d-1 coordinates, with mx = -I + diag(dP) L
        let mut jac = DMatrix::zeros(2 * k, 2 * k);
        for a in 0..k {
            for b in 0..k {
                let xx: f64 = (0..d).map(|r| self.l[(r, a)] * dp[r] * self.l[(r, b)]).sum();
                jac[(a, b)] = xx;
                let mx = dp[a] * self.l[(a, b)] - if a == b { 1.0 } else { 0.0 };
                jac[(k + a, b)] = mx;
                jac[(b, k + a)] = mx;
            }
            jac[(k + a, k + a)] = 1.0 + dp[a];
        }
        (grad, jac)
    }

    fn psi(&self, y: &[f64]) -> f64 {
        let d = self.d;
        let k = d - 1;
        let mut x = vec![0.0; d];
        let mut mu = vec![0.0; d];
        x[..k].copy_from_slice(&y[..k]);
        mu[..k].copy_from_slice(&y[k..]);
        (0..d)
            .map(|r| {
                let c: f64 = (0..r).map(|j| self.l[(r, j)] * x[j]).sum();
                ln_normal_prob(self.lower[r] - mu[r] - c, self.upper[r] - mu[r] - c) + 0.5 * mu[r] * mu[r]
                    - x[r] * mu[r]
            })
            .sum()
    }

    /// Damped Newton iteration on `∇ψ = 0`.
    fn solve(&self) -> Option<(Tilt, f64)> {
        let k = self.d - 1;
        let mut y = DVector::zeros(2 * k);
        let (mut grad, mut jac) = self.gradient(y.as_slice());
        let mut norm = grad.norm_squared();
        for _ in 0..100 {
            if norm < 1e-20 {
                break;
            }
            let step = jac.clone().lu().solve(&(-&grad))?;
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial = &y + &step * t;
                let (g, j) = self.gradient(trial.as_slice());
                let nn = g.norm_squared();
                if nn.is_finite() && nn < norm {
                    y = trial;
                    grad = g;
                    jac = j;
                    norm = nn;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if !(norm < 1e-12) {
            return None;
        }
        let psi_star = self.psi(y.as_slice());
        if !psi_star.is_finite() {
            return None;
        }
        let mut mu = vec![0.0; self.d];
        mu[..k].copy_from_slice(&y.as_slice()[k..]);
        Some((Tilt { mu }, psi_star))
    }

    /// Sequential draw from the tilted proposal; returns its log weight.
    fn propose<R: Rng + ?Sized>(&self, tilt: &Tilt, z: &mut [f64], rng: &mut R) -> f64 {
        let mut log_p = 0.0;
        for r in 0..self.d {
            let c: f64 = (0..r).map(|j| self.l[(r, j)] * z[j]).sum();
            let m = tilt.mu[r];
            let tl = self.lower[r] - m - c;
            let tu = self.upper[r] - m - c;
            z[r] = m + sample_truncated_standard(tl, tu, rng);
            log_p += ln_normal_prob(tl, tu) + 0.5 * m * m - m * z[r];
        }
        log_p
    }

    /// `x = mean + P (L z)`, undoing the reordering.
    fn map_back(&self, z: &[f64], mean: &[f64], x: &mut [f64]) {
        for r in 0..self.d {
            let v: f64 = (0..=r).map(|c| self.l_full[(r, c)] * z[c]).sum();
            let orig = self.perm[r];
            x[orig] = mean[orig] + v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corr2(rho: f64) -> SpdMatrix {
        SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])).unwrap()
    }

    fn moments(draws: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>) {
        let n = draws.len() as f64;
        let d = draws[0].len();
        let mean: Vec<f64> = (0..d).map(|k| draws.iter().map(|x| x[k]).sum::<f64>() / n).collect();
        let cov = DMatrix::from_fn(d, d, |a, b| {
            draws.iter().map(|x| (x[a] - mean[a]) * (x[b] - mean[b])).sum::<f64>() / (n - 1.0)
        });
        (mean, cov)
    }

    #[test]
    fn untruncated_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cov = SpdMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.5, -0.3, 0.5, 1.0, 0.2, -0.3, 0.2, 0.7],
        ))
        .unwrap();
        let mean = [1.0, -2.0, 0.5];
        let n = 50_000;
        let draws: Vec<Vec<f64>> = (0..n)
            .map(|_| sample_tmvn(&mean, &cov, &TruncationBox::unbounded(3), &mut rng).unwrap())
            .collect();
        let (m, c) = moments(&draws);
        for k in 0..3 {
            let se = (cov.get(k, k) / n as f64).sqrt();
            assert!((m[k] - mean[k]).abs() < 3.0 * se);
            for j in 0..3 {
                // var of a sample covariance entry: (σ_kk σ_jj + σ_kj²)/n
                let se = ((cov.get(k, k) * cov.get(j, j) + cov.get(k, j).powi(2)) / n as f64).sqrt();
                assert!((c[(k, j)] - cov.get(k, j)).abs() < 3.0 * se, "cov[{k},{j}]");
            }
        }
    }

    #[test]
    fn positive_quadrant_matches_quadrature() {
        // E[x_1] for N(0, [[1, ρ],[ρ, 1]]) on (0,∞)² by 2-d midpoint quadrature
        let rho = 0.5;
        let h = 0.01;
        let (mut mass, mut first) = (0.0, 0.0);
        let det = 1.0 - rho * rho;
        for a in 0..1000 {
            for b in 0..1000 {
                let x = (a as f64 + 0.5) * h;
                let y = (b as f64 + 0.5) * h;
                let dens = (-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det)).exp();
                mass += dens;
                first += x * dens;
            }
        }
        let oracle = first / mass;

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bx = TruncationBox::new(vec![0.0, 0.0], vec![f64::INFINITY; 2]).unwrap();
        let n = 50_000;
        let mean = (0..n)
            .map(|_| sample_tmvn(&[0.0, 0.0], &corr2(rho), &bx, &mut rng).unwrap()[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - oracle).abs() < 1e-2, "{mean} vs {oracle}");
    }

    #[test]
    fn half_normal_via_tmvn() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bx = TruncationBox::new(vec![0.0], vec![f64::INFINITY]).unwrap();
        let n = 50_000;
        let mean = (0..n)
            .map(|_| sample_tmvn(&[0.0], &SpdMatrix::identity(1), &bx, &mut rng).unwrap()[0])
            .sum::<f64>()
            / n as f64;
        let se = (1.0 - 2.0 / std::f64::consts::PI).sqrt() / (n as f64).sqrt();
        assert!((mean - (2.0 / std::f64::consts::PI).sqrt()).abs() < 3.0 * se);
    }

    #[test]
    fn narrow_box_far_from_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cov = SpdMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.8, 0.3, 0.8, 1.0, 0.5, 0.3, 0.5, 1.0],
        ))
        .unwrap();
        let bx = TruncationBox::new(vec![2.0, -4.0, 1.0], vec![2.1, -3.9, f64::INFINITY]).unwrap();
        let sampler = TmvnSampler::default();
        let mut ar = 0;
        for _ in 0..500 {
            let draw = sampler.sample(&[0.0; 3], &cov, &bx, None, &mut rng).unwrap();
            assert!(bx.contains_strictly(&draw.x));
            if matches!(draw.path, TmvnPath::AcceptReject(_)) {
                ar += 1;
            }
        }
        assert!(ar > 450);
    }

    #[test]
    fn gibbs_fallback_respects_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sampler = TmvnSampler::new(TmvnConfig {
            max_trials: 0,
            ..TmvnConfig::default()
        });
        let bx = TruncationBox::new(vec![-1.0, 0.5], vec![0.0, 3.0]).unwrap();
        let start = [-0.5, 1.0];
        for _ in 0..200 {
            let d = sampler
                .sample(&[0.0, 0.0], &corr2(0.7), &bx, Some(&start), &mut rng)
                .unwrap();
            assert_eq!(d.path, TmvnPath::GibbsFallback);
            assert!(bx.contains_strictly(&d.x));
        }
    }

    #[test]
    fn forced_accept_reject_dimension_limit() {
        let sampler = TmvnSampler::new(TmvnConfig {
            max_accept_reject_dim: 2,
            force_accept_reject: true,
            ..TmvnConfig::default()
        });
        let bx = TruncationBox::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = sampler.sample(&[0.0; 3], &SpdMatrix::identity(3), &bx, None, &mut rng);
        assert_eq!(r.unwrap_err(), TmvnError::DimensionTooLarge(3));
    }

    #[test]
    fn empty_box_rejected() {
        assert!(matches!(
            TruncationBox::new(vec![1.0], vec![1.0]),
            Err(TmvnError::EmptyBox { index: 0, .. })
        ));
    }

    #[test]
    fn deterministic_under_seed() {
        let bx = TruncationBox::new(vec![0.0, -1.0], vec![1.0, f64::INFINITY]).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| sample_tmvn(&[0.2, 0.1], &corr2(-0.4), &bx, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn orthant_probability_matches_tilted_moment() {
        // E[x_1 | x in (0,∞)²] for ρ = 0 equals √(2/π)
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let bx = TruncationBox::new(vec![0.0, 0.0], vec![f64::INFINITY; 2]).unwrap();
        let n = 40_000;
        let m = (0..n)
            .map(|_| sample_tmvn(&[0.0, 0.0], &SpdMatrix::identity(2), &bx, &mut rng).unwrap()[1])
            .sum::<f64>()
            / n as f64;
        let se = (1.0 - 2.0 / std::f64::consts::PI).sqrt() / (n as f64).sqrt();
        assert!((m - (2.0 / std::f64::consts::PI).sqrt()).abs() < 3.0 * se);
    }
}
