use std::sync::OnceLock;

use num_traits::ToPrimitive;
use rand::Rng;

use super::distance_penalty;
use crate::error::{Error, Result};
use crate::mnfa::{Mnfa, MnfaPolicy};
use crate::numeric::{inverse_cdf, ln_binomial, log_sum_exp};
use crate::word::{check_privacy_params, hamming_distance, MechanismConfig, Word};

/// Probability of each output distance `0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceDistribution {
    probabilities: Vec<f64>,
    log_probabilities: Vec<f64>,
}

impl DistanceDistribution {
    /// Normalizes unnormalized log-weights (`-inf` allowed) with log-sum-exp.
    pub fn from_log_weights(log_weights: Vec<f64>) -> Result<Self> {
        let z = log_sum_exp(&log_weights);
        if !z.is_finite() {
            return Err(Error::InvalidParameter(
                "distance weights are all zero".into(),
            ));
        }
        let log_probabilities: Vec<f64> = log_weights.iter().map(|w| w - z).collect();
        let probabilities = log_probabilities.iter().map(|lp| lp.exp()).collect();
        Ok(Self {
            probabilities,
            log_probabilities,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, distance: usize) -> f64 {
        self.probabilities.get(distance).copied().unwrap_or(0.0)
    }

    pub fn ln_probability(&self, distance: usize) -> f64 {
        self.log_probabilities
            .get(distance)
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }

    pub fn max_distance(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(l, p)| l as f64 * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probabilities
            .iter()
            .enumerate()
            .map(|(l, p)| (l as f64 - mean).powi(2) * p)
            .sum()
    }

    /// Inverse-CDF draw; consumes one `f64` uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        inverse_cdf(&self.probabilities, u)
    }
}

/// `p(l) ∝ C(n, l) (m-1)^l exp(-epsilon l / 2k)` for `l` in `0..=n`.
///
/// With a single-symbol alphabet only `l = 0` has mass.
pub fn offline_distance_distribution(
    n: usize,
    m: usize,
    epsilon: f64,
    k: usize,
) -> Result<DistanceDistribution> {
    if n == 0 {
        return Err(Error::EmptyWord);
    }
    if m == 0 {
        return Err(Error::InvalidParameter("alphabet size must be >= 1".into()));
    }
    check_privacy_params(epsilon, k)?;
    let ln_subs = ((m - 1) as f64).ln();
    let log_weights = (0..=n)
        .map(|l| {
            if l == 0 {
                0.0
            } else if m == 1 {
                f64::NEG_INFINITY
            } else {
                ln_binomial(n as u64, l as u64) + l as f64 * ln_subs + distance_penalty(epsilon, l, k)
            }
        })
        .collect();
    DistanceDistribution::from_log_weights(log_weights)
}

/// Offline mechanism bound to one input word. Per-distance policies are
/// synthesized on first use and cached.
#[derive(Debug)]
pub struct OfflineMechanism {
    input: Word,
    distances: DistanceDistribution,
    policies: Vec<OnceLock<MnfaPolicy>>,
}

impl OfflineMechanism {
    pub fn new(input: Word, epsilon: f64, k: usize) -> Result<Self> {
        let n = input.len();
        let distances = offline_distance_distribution(n, input.alphabet_size(), epsilon, k)?;
        Ok(Self {
            input,
            distances,
            policies: (0..=n).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn input(&self) -> &Word {
        &self.input
    }

    pub fn distance_distribution(&self) -> &DistanceDistribution {
        &self.distances
    }

    /// Synthesized automaton for distance `l`.
    pub fn policy(&self, l: usize) -> Result<&MnfaPolicy> {
        let cell = self.policies.get(l).ok_or(Error::DistanceTooLarge {
            distance: l,
            length: self.input.len(),
        })?;
        if let Some(p) = cell.get() {
            return Ok(p);
        }
        let policy = Mnfa::new(self.input.clone(), l)?.synthesize();
        Ok(cell.get_or_init(|| policy))
    }

    /// Draws a distance, then one run of the matching automaton.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Word {
        let l = self.distances.sample(rng);
        self.policy(l)
            .expect("sampled distance has positive mass")
            .sample_run(rng)
    }

    /// Natural log of the exact output probability of `output`: the distance
    /// mass times the automaton's path probability.
    pub fn ln_output_probability(&self, output: &Word) -> Result<f64> {
        let d = hamming_distance(&self.input, output)?;
        let ln_pl = self.distances.ln_probability(d);
        if ln_pl == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let path = self
            .policy(d)?
            .path_probability(output)
            .expect("word at distance d is accepted");
        Ok(ln_pl + ln_ratio(&path))
    }
}

pub(crate) fn ln_ratio(r: &num_rational::BigRational) -> f64 {
    use num_bigint::Sign;
    if r.numer().sign() == Sign::NoSign {
        return f64::NEG_INFINITY;
    }
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    match r.to_f64() {
        Some(v) if v > 0.0 && v.is_finite() => v.ln(),
        _ => crate::numeric::ln_biguint(num) - crate::numeric::ln_biguint(den),
    }
}

/// Privatizes `input` with a fresh stream seeded from `cfg`.
pub fn privatize_offline(input: &Word, cfg: &MechanismConfig) -> Result<Word> {
    let mechanism = OfflineMechanism::new(input.clone(), cfg.epsilon(), cfg.k())?;
    Ok(mechanism.sample(&mut cfg.stream()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::empirical_moments;
    use crate::rng::RandomStream;

    #[test]
    fn single_position_binary() {
        for eps in [0.1, 1.0, 3.0] {
            let d = offline_distance_distribution(1, 2, eps, 1).unwrap();
            let e = (-eps / 2.0f64).exp();
            assert!((d.probability(1) - e / (1.0 + e)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_epsilon_is_binomial_over_uniform_words() {
        let (n, m) = (5usize, 3usize);
        let d = offline_distance_distribution(n, m, 0.0, 1).unwrap();
        let binom = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
        for (l, &c) in binom.iter().enumerate().take(n + 1) {
            let expected = c * 2f64.powi(l as i32) / 3f64.powi(5);
            assert!((d.probability(l) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn huge_epsilon_concentrates_at_zero() {
        let d = offline_distance_distribution(10, 50, 1e9, 1).unwrap();
        assert_eq!(d.probability(0), 1.0);
        let inf = offline_distance_distribution(10, 50, f64::INFINITY, 1).unwrap();
        assert_eq!(inf.probability(0), 1.0);
    }

    #[test]
    fn large_instances_do_not_overflow() {
        let d = offline_distance_distribution(400, 50, 1.0, 1).unwrap();
        let total: f64 = d.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(d.probabilities().iter().all(|p| p.is_finite() && *p >= 0.0));
    }

    #[test]
    fn single_symbol_alphabet_degenerates() {
        let d = offline_distance_distribution(4, 1, 1.0, 1).unwrap();
        assert_eq!(d.probability(0), 1.0);
        assert_eq!(d.probability(1), 0.0);
    }

    #[test]
    fn echo_under_huge_epsilon() {
        let w = Word::new(vec![1, 0, 2, 2], 3).unwrap();
        let cfg = MechanismConfig::new(1e9, 1, 11).unwrap();
        assert_eq!(privatize_offline(&w, &cfg).unwrap(), w);
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let w = Word::new(vec![1, 0, 2, 2, 0, 1], 3).unwrap();
        let cfg = MechanismConfig::new(0.5, 1, 99).unwrap();
        assert_eq!(
            privatize_offline(&w, &cfg).unwrap(),
            privatize_offline(&w, &cfg).unwrap()
        );
    }

    #[test]
    fn sampled_mean_matches_distribution() {
        let w = Word::new(vec![0; 12], 4).unwrap();
        let mech = OfflineMechanism::new(w.clone(), 1.0, 1).unwrap();
        let mut rng = RandomStream::from_seed(5);
        let samples: Vec<f64> = (0..20_000)
            .map(|_| hamming_distance(&w, &mech.sample(&mut rng)).unwrap() as f64)
            .collect();
        let stats = empirical_moments(&samples).unwrap();
        let mean = mech.distance_distribution().mean();
        assert!((stats.mean - mean).abs() < 4.0 * stats.standard_error_mean);
    }
}
