use rand::Rng;

use crate::error::{Error, Result};
use crate::word::{check_privacy_params, Word};

/// Per-symbol policy: echo the input with probability `tau`, otherwise emit
/// one of the other `m - 1` symbols uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlinePolicy {
    alphabet_size: usize,
    tau: f64,
}

impl OnlinePolicy {
    /// Policy with an explicit `tau`. Values other than the calibrated one
    /// void the privacy guarantee; used for negative controls.
    pub fn with_tau(alphabet_size: usize, tau: f64) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::InvalidParameter("alphabet size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParameter(format!("tau must be in [0, 1], got {tau}")));
        }
        if alphabet_size == 1 && tau != 1.0 {
            return Err(Error::InvalidParameter(
                "a single-symbol alphabet forces tau = 1".into(),
            ));
        }
        Ok(Self { alphabet_size, tau })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Probability of the correct transition.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Probability of each individual substitute symbol, `(1 - tau) / (m - 1)`.
    pub fn substitution_probability(&self) -> f64 {
        if self.alphabet_size == 1 {
            0.0
        } else {
            (1.0 - self.tau) / (self.alphabet_size - 1) as f64
        }
    }

    /// `mu(output | input)`.
    pub fn probability(&self, output: usize, input: usize) -> f64 {
        if output == input {
            self.tau
        } else {
            self.substitution_probability()
        }
    }

    /// Privatizes one symbol. Draw order: one `f64` uniform, then on
    /// substitution one integer in `0..m-1`.
    pub fn step<R: Rng + ?Sized>(&self, symbol: usize, rng: &mut R) -> Result<usize> {
        let m = self.alphabet_size;
        if symbol >= m {
            return Err(Error::SymbolOutOfRange {
                index: symbol,
                size: m,
            });
        }
        let u: f64 = rng.gen();
        if u < self.tau || m == 1 {
            return Ok(symbol);
        }
        let r = rng.gen_range(0..m - 1);
        Ok(if r >= symbol { r + 1 } else { r })
    }
}

/// `tau = 1 / ((m - 1) exp(-epsilon / k) + 1)`.
pub fn online_policy(m: usize, epsilon: f64, k: usize) -> Result<OnlinePolicy> {
    check_privacy_params(epsilon, k)?;
    if m == 0 {
        return Err(Error::InvalidParameter("alphabet size must be >= 1".into()));
    }
    let decay = (-epsilon / k as f64).exp();
    let tau = 1.0 / ((m - 1) as f64 * decay + 1.0);
    OnlinePolicy::with_tau(m, tau)
}

pub fn privatize_online_step<R: Rng + ?Sized>(
    symbol: usize,
    policy: &OnlinePolicy,
    rng: &mut R,
) -> Result<usize> {
    policy.step(symbol, rng)
}

/// Whole-word convenience; identical to calling [`privatize_online_step`]
/// once per position on the same stream.
pub fn privatize_online<R: Rng + ?Sized>(
    input: &Word,
    policy: &OnlinePolicy,
    rng: &mut R,
) -> Result<Word> {
    if input.alphabet_size() != policy.alphabet_size() {
        return Err(Error::AlphabetMismatch {
            left: input.alphabet_size(),
            right: policy.alphabet_size(),
        });
    }
    let out = input
        .symbols()
        .iter()
        .map(|&s| policy.step(s, rng))
        .collect::<Result<Vec<_>>>()?;
    Word::new(out, policy.alphabet_size())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use proptest::prelude::*;

    #[test]
    fn zero_epsilon_is_uniform() {
        let p = online_policy(7, 0.0, 1).unwrap();
        assert!((p.tau() - 1.0 / 7.0).abs() < 1e-15);
        assert!((p.substitution_probability() - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn fifty_symbols_epsilon_five() {
        let p = online_policy(50, 5.0, 1).unwrap();
        let expected = 1.0 / (49.0 * (-5.0f64).exp() + 1.0);
        assert!((p.tau() - expected).abs() < 1e-15);
        assert!((p.tau() - 0.7518).abs() < 1e-4);
    }

    #[test]
    fn mass_sums_to_one() {
        for m in [2, 3, 10, 50] {
            let p = online_policy(m, 0.7, 2).unwrap();
            let total: f64 = (0..m).map(|o| p.probability(o, 0)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_epsilon_echoes() {
        let p = online_policy(5, 1e9, 1).unwrap();
        let mut rng = RandomStream::from_seed(0);
        let w = Word::new(vec![4, 0, 3, 3, 1], 5).unwrap();
        assert_eq!(privatize_online(&w, &p, &mut rng).unwrap(), w);
    }

    #[test]
    fn out_of_range_symbol_is_rejected() {
        let p = online_policy(3, 1.0, 1).unwrap();
        assert!(p.step(3, &mut RandomStream::from_seed(0)).is_err());
    }

    #[test]
    fn wrapper_equals_sequential_steps() {
        let p = online_policy(4, 0.8, 1).unwrap();
        let w = Word::new(vec![0, 1, 2, 3, 0, 1, 2, 3], 4).unwrap();
        let whole = privatize_online(&w, &p, &mut RandomStream::from_seed(42)).unwrap();
        let mut rng = RandomStream::from_seed(42);
        let steps: Vec<usize> = w.symbols().iter().map(|&s| p.step(s, &mut rng).unwrap()).collect();
        assert_eq!(whole.symbols(), steps.as_slice());
    }

    proptest! {
        #[test]
        fn correct_transition_dominates(m in 2usize..60, eps in 0.001f64..20.0, k in 1usize..5) {
            let p = online_policy(m, eps, k).unwrap();
            prop_assert!(p.tau() > p.substitution_probability());
            prop_assert!(p.tau() >= 1.0 / m as f64);
            let ratio = p.tau() / p.substitution_probability();
            prop_assert!((ratio.ln() - eps / k as f64).abs() < 1e-9 * (1.0 + eps));
        }
    }
}
