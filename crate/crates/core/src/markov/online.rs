use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::inverse_cdf;
use crate::word::{check_privacy_params, Word};

use super::MarkovChain;

/// Conditional output table `mu(out | s_t, prev_out)` for the online Markov
/// mechanism.
///
/// With `N = N(prev_out)` and `beta = 1` iff `s_t` is feasible from
/// `prev_out`: the true state gets `tau = 1 / ((N - 1) exp(-epsilon/k) + 1)`
/// when `beta = 1`; every other feasible state gets
/// `(1 - tau beta) / (N - beta)`; infeasible states get 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovOnlinePolicy {
    states: usize,
    taus: Vec<f64>,
    table: Vec<f64>,
}

impl MarkovOnlinePolicy {
    fn build(chain: &MarkovChain, tau_of: impl Fn(usize) -> f64) -> Self {
        let s = chain.state_count();
        let taus: Vec<f64> = (0..s).map(|prev| tau_of(chain.feasible_count(prev))).collect();
        let mut table = vec![0.0; s * s * s];
        for current in 0..s {
            for (prev, &tau) in taus.iter().enumerate() {
                let n = chain.feasible_count(prev);
                let beta = chain.is_transition_feasible(prev, current);
                let base = (current * s + prev) * s;
                for &out in chain.successors(prev) {
                    table[base + out] = if beta && out == current {
                        tau
                    } else if beta {
                        (1.0 - tau) / (n - 1) as f64
                    } else {
                        1.0 / n as f64
                    };
                }
            }
        }
        Self {
            states: s,
            taus,
            table,
        }
    }

    /// Table with the same `tau` for every `N`; for negative controls only.
    pub fn with_fixed_tau(chain: &MarkovChain, tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParameter(format!("tau must be in [0, 1], got {tau}")));
        }
        Ok(Self::build(chain, |n| if n == 1 { 1.0 } else { tau }))
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    /// `tau(s_t, prev_out)`; depends only on `N(prev_out)`.
    pub fn tau(&self, prev_out: usize) -> f64 {
        self.taus[prev_out]
    }

    pub fn row(&self, current: usize, prev_out: usize) -> &[f64] {
        let s = self.states;
        let base = (current * s + prev_out) * s;
        &self.table[base..base + s]
    }

    pub fn probability(&self, out: usize, current: usize, prev_out: usize) -> f64 {
        self.row(current, prev_out)[out]
    }

    /// One online step. Draw order: one `f64` uniform deciding whether to
    /// echo `current`; otherwise one more uniform resolved by inverse CDF over
    /// the remaining states in ascending order.
    pub fn step<R: Rng + ?Sized>(&self, current: usize, prev_out: usize, rng: &mut R) -> Result<usize> {
        for idx in [current, prev_out] {
            if idx >= self.states {
                return Err(Error::SymbolOutOfRange {
                    index: idx,
                    size: self.states,
                });
            }
        }
        let row = self.row(current, prev_out);
        let u: f64 = rng.gen();
        if u < row[current] {
            return Ok(current);
        }
        let rest: Vec<f64> = row
            .iter()
            .enumerate()
            .map(|(i, &p)| if i == current { 0.0 } else { p })
            .collect();
        if rest.iter().all(|&p| p == 0.0) {
            return Ok(current);
        }
        Ok(inverse_cdf(&rest, rng.gen()))
    }
}

pub fn markov_online_policy(chain: &MarkovChain, epsilon: f64, k: usize) -> Result<MarkovOnlinePolicy> {
    check_privacy_params(epsilon, k)?;
    let decay = (-epsilon / k as f64).exp();
    Ok(MarkovOnlinePolicy::build(chain, |n| {
        1.0 / ((n as f64 - 1.0) * decay + 1.0)
    }))
}

pub fn privatize_markov_online_step<R: Rng + ?Sized>(
    current: usize,
    prev_out: usize,
    policy: &MarkovOnlinePolicy,
    rng: &mut R,
) -> Result<usize> {
    policy.step(current, prev_out, rng)
}

/// Privatizes a whole word starting from the chain's public initial state.
/// Equivalent to `n` sequential steps on the same stream.
pub fn privatize_markov_online<R: Rng + ?Sized>(
    chain: &MarkovChain,
    input: &Word,
    policy: &MarkovOnlinePolicy,
    rng: &mut R,
) -> Result<Word> {
    if input.alphabet_size() != policy.state_count() || chain.state_count() != policy.state_count() {
        return Err(Error::AlphabetMismatch {
            left: input.alphabet_size(),
            right: policy.state_count(),
        });
    }
    let mut prev = chain.initial();
    let mut out = Vec::with_capacity(input.len());
    for &s in input.symbols() {
        prev = policy.step(s, prev, rng)?;
        out.push(prev);
    }
    Word::new(out, policy.state_count())
}
