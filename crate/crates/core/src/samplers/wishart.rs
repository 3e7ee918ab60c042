use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::SamplerError;
use crate::linalg::{cholesky, SpdMatrix};

/// Draw from `IW(df, scale)`, whose mean is `scale / (df − dim − 1)`.
///
/// Bartlett construction: with `scale⁻¹ = C Cᵀ` and `A` lower triangular
/// (`A_kk² ~ χ²(df − k)`, `A_kj ~ N(0, 1)` below the diagonal), the
/// Wishart draw is `(CA)(CA)ᵀ` and its inverse is `(CA)⁻ᵀ (CA)⁻¹`.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(
    df: f64,
    scale: &SpdMatrix,
    rng: &mut R,
) -> Result<SpdMatrix, SamplerError> {
    let d = scale.dim();
    if !(df > d as f64 - 1.0) || !df.is_finite() {
        return Err(SamplerError::InvalidDegreesOfFreedom { df, dim: d });
    }
    let precision = cholesky(scale)?.inverse();
    let c = cholesky(&precision)?;
    let mut a = DMatrix::<f64>::zeros(d, d);
    for k in 0..d {
        let chi = ChiSquared::new(df - k as f64).map_err(|_| SamplerError::InvalidDegreesOfFreedom { df, dim: d })?;
        a[(k, k)] = chi.sample(rng).sqrt();
        for j in 0..k {
            a[(k, j)] = rng.sample(StandardNormal);
        }
    }
    let ca = c.l() * a;
    let inv = ca
        .solve_lower_triangular(&DMatrix::identity(d, d))
        .ok_or(SamplerError::Degenerate)?;
    Ok(SpdMatrix::from_symmetric(inv.tr_mul(&inv)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_matches_scale_over_df() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scale = SpdMatrix::identity(2).scaled(7.0);
        let n = 50_000;
        let draws: Vec<SpdMatrix> = (0..n)
            .map(|_| sample_inverse_wishart(10.0, &scale, &mut rng).unwrap())
            .collect();
        for (a, b) in [(0, 0), (0, 1), (1, 1)] {
            let vals: Vec<f64> = draws.iter().map(|m| m.get(a, b)).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let target = if a == b { 1.0 } else { 0.0 };
            assert!(
                (mean - target).abs() < 3.0 * (var / n as f64).sqrt(),
                "({a},{b}) mean {mean}"
            );
        }
    }

    #[test]
    fn one_dimensional_is_inverse_gamma() {
        // IW_1(v, s) = InvGamma(v/2, s/2): mean s/(v-2), var 2s²/((v-2)²(v-4))
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (v, s) = (9.0, 3.0);
        let n = 60_000;
        let scale = SpdMatrix::identity(1).scaled(s);
        let vals: Vec<f64> = (0..n)
            .map(|_| sample_inverse_wishart(v, &scale, &mut rng).unwrap().get(0, 0))
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let exact_mean = s / (v - 2.0);
        let exact_var = 2.0 * s * s / ((v - 2.0).powi(2) * (v - 4.0));
        assert!((mean - exact_mean).abs() < 3.0 * (exact_var / n as f64).sqrt());
        assert!((var - exact_var).abs() / exact_var < 0.05);
    }

    #[test]
    fn draws_are_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scale = SpdMatrix::identity(6).scaled(8.0);
        for _ in 0..200 {
            let v = sample_inverse_wishart(8.0, &scale, &mut rng).unwrap();
            assert!(cholesky(&v).is_ok());
        }
    }

    #[test]
    fn rejects_small_df() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = sample_inverse_wishart(1.5, &SpdMatrix::identity(3), &mut rng);
        assert!(matches!(r, Err(SamplerError::InvalidDegreesOfFreedom { .. })));
    }
}
