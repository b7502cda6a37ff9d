//! Log-space helpers and categorical sampling.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

/// `ln(sum(exp(x)))`, ignoring `-inf` entries. Returns `-inf` for an empty or
/// all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Normalizes log-weights into probabilities.
pub fn normalize_log_weights(log_weights: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(log_weights);
    log_weights.iter().map(|&w| (w - z).exp()).collect()
}

/// Natural log of an arbitrary-size integer; `-inf` for zero.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit prefix");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln C(n, r)` via log-gamma.
pub fn ln_binomial(n: u64, r: u64) -> f64 {
    statrs::function::factorial::ln_binomial(n, r)
}

/// Exact ratio `num / den` as `f64`.
pub fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    BigRational::new(num.clone().into(), den.clone().into())
        .to_f64()
        .unwrap_or(f64::NAN)
}

/// Inverse-CDF draw from a probability vector. Consumes one `f64` uniform.
/// Entries with zero probability are never returned.
pub fn sample_categorical<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    inverse_cdf(probabilities, u)
}

pub(crate) fn inverse_cdf(probabilities: &[f64], u: f64) -> usize {
    let total: f64 = probabilities.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last_positive = i;
        if target < acc {
            return i;
        }
    }
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn lse_matches_direct_sum() {
        let xs = [0.1f64, -2.0, 3.5];
        let direct = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        // No overflow for large magnitudes.
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn ln_of_huge_integer() {
        let x = BigUint::one() << 3000u32;
        assert!((ln_biguint(&x) - 3000.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert!((ln_biguint(&BigUint::from(12u32)) - 12f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn ln_binomial_small() {
        assert!((ln_binomial(3, 2) - 3f64.ln()).abs() < 1e-12);
        assert!((ln_binomial(10, 0)).abs() < 1e-12);
    }

    #[test]
    fn inverse_cdf_skips_zeros() {
        let p = [0.0, 0.5, 0.0, 0.5];
        assert_eq!(inverse_cdf(&p, 0.0), 1);
        assert_eq!(inverse_cdf(&p, 0.49), 1);
        assert_eq!(inverse_cdf(&p, 0.51), 3);
        assert_eq!(inverse_cdf(&p, 0.999_999_999), 3);
    }
}
