//! Dense SPD kernels: Cholesky with a single jitter retry, triangular solves,
//! Gaussian conditioning and the multivariate normal log-density.
//!
//! Kronecker-structured covariances `H ⊗ R` are never formed here; callers
//! work with the spatial factor and the outcome factor separately.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const SYMMETRY_RTOL: f64 = 1e-12;
const JITTER_SCALE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not symmetric: |a[{row},{col}] - a[{col},{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index sets overlap at {0}")]
    OverlappingIndex(usize),
}

/// Symmetric matrix that is expected to be positive definite.
///
/// Symmetry is checked on construction; definiteness is only checked when
/// the matrix is factorized.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
        for c in 0..m.ncols() {
            for r in (c + 1)..m.nrows() {
                let gap = (m[(r, c)] - m[(c, r)]).abs();
                if !(gap <= SYMMETRY_RTOL * scale) {
                    return Err(LinalgError::NotSymmetric { row: r, col: c, gap });
                }
            }
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is symmetric by construction, copying the lower
    /// triangle over the upper one to remove rounding asymmetry.
    pub fn from_symmetric(mut m: DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "SPD matrix must be square");
        for c in 0..m.ncols() {
            for r in (c + 1)..m.nrows() {
                m[(c, r)] = m[(r, c)];
            }
        }
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(&self.0 * factor)
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn principal(&self, idx: &[usize]) -> Self {
        Self(DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.0[(idx[r], idx[c])]))
    }

    /// Rescales to unit diagonal: `a[i][j] / sqrt(a[i][i] a[j][j])`.
    pub fn to_correlation(&self) -> Self {
        let d = self.dim();
        let sd: Vec<f64> = (0..d).map(|i| self.0[(i, i)].sqrt()).collect();
        let mut out = DMatrix::from_fn(d, d, |r, c| self.0[(r, c)] / (sd[r] * sd[c]));
        for i in 0..d {
            out[(i, i)] = 1.0;
        }
        Self::from_symmetric(out)
    }
}

/// Lower-triangular `L` with `L Lᵀ = A (+ jitter·I)`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: DMatrix<f64>,
    log_det: f64,
    jitter: f64,
}

impl CholeskyFactor {
    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `log |A|`, i.e. `2 Σ log L_kk`.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Diagonal jitter that was added before the factorization succeeded (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// In-place forward substitution `L x = b`.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        // column-oriented so the inner loop walks contiguous storage
        let data = self.l.as_slice();
        for c in 0..n {
            let col = &data[c * n..(c + 1) * n];
            let x = b[c] / col[c];
            b[c] = x;
            if x != 0.0 {
                for (v, l) in b[(c + 1)..].iter_mut().zip(&col[(c + 1)..]) {
                    *v -= l * x;
                }
            }
        }
    }

    /// In-place back substitution `Lᵀ x = b`.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let data = self.l.as_slice();
        for c in (0..n).rev() {
            let col = &data[c * n..(c + 1) * n];
            let dot: f64 = b[(c + 1)..].iter().zip(&col[(c + 1)..]).map(|(x, l)| x * l).sum();
            b[c] = (b[c] - dot) / col[c];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `L⁻¹ B`, column by column.
    pub fn whiten_columns(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = b.clone();
        let n = self.dim();
        if n == 0 {
            return out;
        }
        for col in out.as_mut_slice().chunks_mut(n) {
            self.solve_lower_in_place(col);
        }
        out
    }

    /// `A⁻¹ B`.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = b.clone();
        let n = self.dim();
        if n == 0 {
            return out;
        }
        for col in out.as_mut_slice().chunks_mut(n) {
            self.solve_lower_in_place(col);
            self.solve_upper_in_place(col);
        }
        out
    }

    /// `xᵀ A⁻¹ x = |L⁻¹ x|²`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut w = x.to_vec();
        self.solve_lower_in_place(&mut w);
        w.iter().map(|v| v * v).sum()
    }

    /// `A⁻¹` as `L⁻ᵀ L⁻¹`.
    pub fn inverse(&self) -> SpdMatrix {
        let n = self.dim();
        let linv = self.whiten_columns(&DMatrix::identity(n, n));
        SpdMatrix::from_symmetric(linv.tr_mul(&linv))
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.l * self.l.transpose()
    }
}

fn factorize(a: &DMatrix<f64>, shift: f64, floor: f64) -> Result<DMatrix<f64>, LinalgError> {
    let n = a.nrows();
    let mut l = a.lower_triangle();
    for j in 0..n {
        l[(j, j)] += shift;
    }
    // left-looking over column-major storage: update column j with all
    // previous columns, then scale
    let data = l.as_mut_slice();
    for j in 0..n {
        let (left, right) = data.split_at_mut(j * n);
        let dst = &mut right[..n];
        for k in 0..j {
            let src = &left[k * n..(k + 1) * n];
            let ljk = src[j];
            if ljk == 0.0 {
                continue;
            }
            for (d, s) in dst[j..].iter_mut().zip(&src[j..]) {
                *d -= s * ljk;
            }
        }
        let pivot = dst[j];
        if !(pivot > floor) || !pivot.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        dst[j] = d;
        for v in dst[(j + 1)..].iter_mut() {
            *v /= d;
        }
    }
    Ok(l)
}

/// Cholesky factorization. On pivot failure the diagonal is shifted by
/// `1e-10 · mean(diag)` and the factorization is retried once.
pub fn cholesky(m: &SpdMatrix) -> Result<CholeskyFactor, LinalgError> {
    let a = m.as_matrix();
    let n = a.nrows();
    let mean_diag = if n == 0 {
        1.0
    } else {
        a.diagonal().iter().sum::<f64>() / n as f64
    };
    let floor = f64::EPSILON * mean_diag.abs();
    let (l, jitter) = match factorize(a, 0.0, floor) {
        Ok(l) => (l, 0.0),
        Err(_) => {
            let jitter = JITTER_SCALE * mean_diag.abs().max(f64::MIN_POSITIVE);
            (factorize(a, jitter, floor)?, jitter)
        }
    };
    let log_det = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(CholeskyFactor { l, log_det, jitter })
}

/// Moments of `x_target | x_given = given_values` under `N(0, joint)`.
///
/// Returns `(Σ_tg Σ_gg⁻¹ v, Σ_tt − Σ_tg Σ_gg⁻¹ Σ_gt)`.
pub fn conditional_normal(
    joint: &SpdMatrix,
    target_idx: &[usize],
    given_idx: &[usize],
    given_values: &[f64],
) -> Result<(DVector<f64>, SpdMatrix), LinalgError> {
    if given_idx.len() != given_values.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: given_idx.len(),
            got: given_values.len(),
        });
    }
    if let Some(&dup) = target_idx.iter().find(|t| given_idx.contains(t)) {
        return Err(LinalgError::OverlappingIndex(dup));
    }
    let a = joint.as_matrix();
    let cov_tt = DMatrix::from_fn(target_idx.len(), target_idx.len(), |r, c| {
        a[(target_idx[r], target_idx[c])]
    });
    if given_idx.is_empty() {
        return Ok((DVector::zeros(target_idx.len()), SpdMatrix::from_symmetric(cov_tt)));
    }
    let chol = cholesky(&joint.principal(given_idx))?;
    let cross = DMatrix::from_fn(given_idx.len(), target_idx.len(), |r, c| {
        a[(given_idx[r], target_idx[c])]
    });
    let weights = chol.solve_matrix(&cross);
    let mean = weights.tr_mul(&DVector::from_column_slice(given_values));
    let cov = cov_tt - cross.tr_mul(&weights);
    Ok((mean, SpdMatrix::from_symmetric(cov)))
}

/// `log N(x; mean, cov)`.
pub fn mvn_logpdf(x: &[f64], mean: &[f64], cov: &SpdMatrix) -> Result<f64, LinalgError> {
    let d = cov.dim();
    for len in [x.len(), mean.len()] {
        if len != d {
            return Err(LinalgError::DimensionMismatch { expected: d, got: len });
        }
    }
    let chol = cholesky(cov)?;
    let resid: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    Ok(mvn_logpdf_factored(&resid, &chol))
}

/// `log N(resid; 0, A)` with `A` already factorized.
pub fn mvn_logpdf_factored(resid: &[f64], chol: &CholeskyFactor) -> f64 {
    let d = chol.dim() as f64;
    -0.5 * (d * LN_2PI + chol.log_det() + chol.quad_form(resid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(d: usize, rng: &mut ChaCha8Rng) -> SpdMatrix {
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        SpdMatrix::from_symmetric(&a * a.transpose() + DMatrix::identity(d, d))
    }

    fn explicit_inverse(m: &SpdMatrix) -> DMatrix<f64> {
        m.as_matrix().clone().try_inverse().unwrap()
    }

    #[test]
    fn identity_factor() {
        let f = cholesky(&SpdMatrix::identity(3)).unwrap();
        assert_eq!(f.l(), &DMatrix::<f64>::identity(3, 3));
        assert_eq!(f.log_det(), 0.0);
    }

    #[test]
    fn hand_checked_2x2() {
        let m = SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0])).unwrap();
        let f = cholesky(&m).unwrap();
        assert_abs_diff_eq!(f.l()[(0, 0)], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.l()[(1, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.l()[(1, 1)], 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(f.l()[(0, 1)], 0.0);
        assert_abs_diff_eq!(f.log_det(), 8f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = random_spd(10, &mut rng);
            let f = cholesky(&m).unwrap();
            let err = (f.reconstruct() - m.as_matrix()).norm() / m.as_matrix().norm();
            assert!(err < 1e-10, "relative error {err}");
            assert_eq!(f.jitter(), 0.0);
        }
    }

    #[test]
    fn singular_matrix_gets_jitter() {
        // two identical rows: rank deficient
        let m = SpdMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 1.0, 0.5, 1.0, 1.0, 0.5, 0.5, 0.5, 1.0],
        ))
        .unwrap();
        let f = cholesky(&m).unwrap();
        assert!(f.jitter() > 0.0);
    }

    #[test]
    fn indefinite_matrix_fails() {
        let m = SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).unwrap();
        assert!(matches!(cholesky(&m), Err(LinalgError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn asymmetric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.3, 1.0]);
        assert!(matches!(SpdMatrix::new(m), Err(LinalgError::NotSymmetric { .. })));
    }

    #[test]
    fn conditional_independent() {
        let (mean, cov) = conditional_normal(&SpdMatrix::identity(4), &[0, 2], &[1, 3], &[0.7, -1.2]).unwrap();
        assert_eq!(mean.as_slice(), &[0.0, 0.0]);
        assert_eq!(cov.as_matrix(), &DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn conditional_bivariate() {
        let rho = 0.6;
        let joint = SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])).unwrap();
        let (mean, cov) = conditional_normal(&joint, &[0], &[1], &[1.5]).unwrap();
        assert_abs_diff_eq!(mean[0], rho * 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(cov.get(0, 0), 1.0 - rho * rho, epsilon = 1e-14);
    }

    #[test]
    fn conditional_matches_explicit_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let joint = random_spd(6, &mut rng);
        let target = [0usize, 1];
        let given = [2usize, 3, 4, 5];
        let values: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (mean, cov) = conditional_normal(&joint, &target, &given, &values).unwrap();

        let a = joint.as_matrix();
        let sgg = joint.principal(&given);
        let sgg_inv = explicit_inverse(&sgg);
        let stg = DMatrix::from_fn(2, 4, |r, c| a[(target[r], given[c])]);
        let stt = DMatrix::from_fn(2, 2, |r, c| a[(target[r], target[c])]);
        let oracle_mean = &stg * &sgg_inv * DVector::from_vec(values.clone());
        let oracle_cov = stt - &stg * &sgg_inv * stg.transpose();
        assert!((mean - oracle_mean).amax() < 1e-12);
        assert!((cov.as_matrix() - oracle_cov).amax() < 1e-12);
    }

    #[test]
    fn conditional_empty_given_is_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let joint = random_spd(4, &mut rng);
        let (mean, cov) = conditional_normal(&joint, &[3, 1], &[], &[]).unwrap();
        assert_eq!(mean.as_slice(), &[0.0, 0.0]);
        assert_eq!(cov.get(0, 0), joint.get(3, 3));
        assert_eq!(cov.get(0, 1), joint.get(3, 1));
        assert_eq!(cov.get(1, 1), joint.get(1, 1));
    }

    #[test]
    fn conditional_cov_ignores_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let joint = random_spd(5, &mut rng);
        let (_, c1) = conditional_normal(&joint, &[0], &[1, 2, 3], &[0.1, 0.2, 0.3]).unwrap();
        let (_, c2) = conditional_normal(&joint, &[0], &[1, 2, 3], &[-5.0, 9.0, 1e3]).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn conditional_overlap_rejected() {
        let r = conditional_normal(&SpdMatrix::identity(3), &[0, 1], &[1], &[0.0]);
        assert_eq!(r.unwrap_err(), LinalgError::OverlappingIndex(1));
    }

    #[test]
    fn logpdf_standard_origin() {
        let v = mvn_logpdf(&[0.0, 0.0], &[0.0, 0.0], &SpdMatrix::identity(2)).unwrap();
        assert_abs_diff_eq!(v, -(2.0 * std::f64::consts::PI).ln(), epsilon = 1e-14);
    }

    #[test]
    fn logpdf_at_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cov = random_spd(3, &mut rng);
        let mean = [0.3, -0.2, 1.0];
        let v = mvn_logpdf(&mean, &mean, &cov).unwrap();
        let logdet = cholesky(&cov).unwrap().log_det();
        assert_abs_diff_eq!(v, -0.5 * (3.0 * LN_2PI + logdet), epsilon = 1e-13);
    }

    #[test]
    fn logpdf_matches_explicit_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let cov = random_spd(5, &mut rng);
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mean: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = DVector::from_iterator(5, x.iter().zip(&mean).map(|(a, b)| a - b));
            let inv = explicit_inverse(&cov);
            let det = cov.as_matrix().determinant();
            let oracle = -0.5 * (5.0 * LN_2PI + det.ln() + (r.transpose() * inv * &r)[0]);
            let v = mvn_logpdf(&x, &mean, &cov).unwrap();
            assert_abs_diff_eq!(v, oracle, epsilon = 1e-8);
        }
    }

    #[test]
    fn inverse_and_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = random_spd(7, &mut rng);
        let f = cholesky(&m).unwrap();
        let inv = f.inverse();
        let prod = m.as_matrix() * inv.as_matrix();
        assert!((prod - DMatrix::<f64>::identity(7, 7)).amax() < 1e-10);
        let b: Vec<f64> = (0..7).map(|i| i as f64 - 3.0).collect();
        let x = f.solve(&b);
        let back = m.as_matrix() * DVector::from_vec(x);
        for (u, v) in back.iter().zip(&b) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-10);
        }
    }

    #[test]
    fn correlation_rescaling() {
        let v = SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 9.0])).unwrap();
        let r = v.to_correlation();
        assert_eq!(r.get(0, 0), 1.0);
        assert_eq!(r.get(1, 1), 1.0);
        assert_abs_diff_eq!(r.get(0, 1), 1.0 / 6.0, epsilon = 1e-15);
    }
}
