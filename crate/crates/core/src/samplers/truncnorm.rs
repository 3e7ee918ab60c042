//! Univariate standard normal truncated to `(l, u)` and the log-probability
//! `log P(l < Z < u)`, both stable far into the tails.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::{erfc, erfc_inv};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
// switch points between the tail, inverse-transform and rejection samplers
const TAIL_THRESHOLD: f64 = 0.66;
const WIDTH_THRESHOLD: f64 = 2.0;

/// `log P(Z > x)`.
pub fn ln_upper_tail(x: f64) -> f64 {
    if x < 37.0 {
        (0.5 * erfc(x / std::f64::consts::SQRT_2)).ln()
    } else {
        let x2 = x * x;
        -0.5 * x2 - x.ln() - LN_SQRT_2PI + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// `log P(a < Z < b)` for `a < b`.
pub fn ln_normal_prob(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        let pa = ln_upper_tail(a);
        let pb = ln_upper_tail(b);
        pa + (-(pb - pa).exp()).ln_1p()
    } else if b < 0.0 {
        let pa = ln_upper_tail(-a);
        let pb = ln_upper_tail(-b);
        pb + (-(pa - pb).exp()).ln_1p()
    } else {
        let pa = 0.5 * erfc(-a / std::f64::consts::SQRT_2);
        let pb = 0.5 * erfc(b / std::f64::consts::SQRT_2);
        (-pa - pb).ln_1p()
    }
}

/// `φ(t) / P(l < Z < u)` evaluated in log space; `±∞` endpoints give 0.
pub(crate) fn scaled_density(t: f64, ln_prob: f64) -> f64 {
    if t.is_infinite() {
        0.0
    } else {
        FRAC_1_SQRT_2PI * (-0.5 * t * t - ln_prob).exp()
    }
}

/// One draw of `Z ~ N(0, 1)` conditioned on `l < Z < u`.
pub fn sample_truncated_standard<R: Rng + ?Sized>(l: f64, u: f64, rng: &mut R) -> f64 {
    debug_assert!(l < u);
    if l > TAIL_THRESHOLD {
        tail(l, u, rng)
    } else if u < -TAIL_THRESHOLD {
        -tail(-u, -l, rng)
    } else if u - l > WIDTH_THRESHOLD {
        loop {
            let x: f64 = rng.sample(StandardNormal);
            if l < x && x < u {
                return x;
            }
        }
    } else {
        let pl = 0.5 * erfc(l / std::f64::consts::SQRT_2);
        let pu = 0.5 * erfc(u / std::f64::consts::SQRT_2);
        let v: f64 = rng.random();
        std::f64::consts::SQRT_2 * erfc_inv(2.0 * (pl - (pl - pu) * v))
    }
}

/// Rayleigh-proposal rejection sampler for `0 < l < Z < u`.
fn tail<R: Rng + ?Sized>(l: f64, u: f64, rng: &mut R) -> f64 {
    let c = 0.5 * l * l;
    let f = (c - 0.5 * u * u).exp_m1();
    loop {
        let v: f64 = rng.random();
        let x = c - (f * v).ln_1p();
        let w: f64 = rng.random();
        if w * w * x <= c {
            return (2.0 * x).sqrt();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn log_prob_against_cdf() {
        let n = Normal::standard();
        for &(a, b) in &[
            (-1.0, 1.0),
            (0.5, 2.0),
            (-3.0, -0.2),
            (-0.1, 0.1),
            (f64::NEG_INFINITY, 0.0),
        ] {
            let direct = (n.cdf(b) - n.cdf(a)).ln();
            assert_relative_eq!(ln_normal_prob(a, b), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn log_prob_far_tail() {
        // Mills-ratio asymptotics at 40: log P(Z > 40) ≈ -800 - log(40) - log√(2π)
        let v = ln_normal_prob(40.0, f64::INFINITY);
        let approx = -800.0 - 40f64.ln() - LN_SQRT_2PI + (1.0f64 - 1.0 / 1600.0 + 3.0 / 1600.0 / 1600.0).ln();
        assert_relative_eq!(v, approx, max_relative = 1e-12);
        assert!(ln_normal_prob(-41.0, -40.0).is_finite());
        assert!(ln_normal_prob(10.0, 10.5).is_finite());
    }

    #[test]
    fn draws_stay_inside_each_regime() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(l, u) in &[
            (-0.5, 0.5),
            (-3.0, 4.0),
            (1.0, f64::INFINITY),
            (f64::NEG_INFINITY, -2.0),
            (5.0, 5.01),
            (-0.2, 1.5),
        ] {
            for _ in 0..2000 {
                let x = sample_truncated_standard(l, u, &mut rng);
                assert!(l <= x && x <= u, "{x} outside ({l}, {u})");
            }
        }
    }

    #[test]
    fn half_normal_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 50_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_truncated_standard(0.0, f64::INFINITY, &mut rng))
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = (1.0 - 2.0 / std::f64::consts::PI).sqrt();
        let target = (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean - target).abs() < 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn tail_mean_matches_mills_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = 3.0;
        let n = 40_000;
        let mean = (0..n)
            .map(|_| sample_truncated_standard(l, f64::INFINITY, &mut rng))
            .sum::<f64>()
            / n as f64;
        let exact = scaled_density(l, ln_normal_prob(l, f64::INFINITY));
        // variance of the truncated law is below 1/l² here
        assert!((mean - exact).abs() < 3.0 * (1.0 / (l * l) / n as f64).sqrt());
    }
}
