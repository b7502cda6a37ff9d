use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mechanisms::{distance_penalty, DistanceDistribution};
use crate::numeric::ln_biguint;
use crate::word::{check_privacy_params, hamming_distance, MechanismConfig, Word};

use super::{build_pmnfa_policy, count_feasible_at_distance, FeasibleDistanceCounts, MarkovChain, Pmnfa};

/// Offline mechanism for a Markov chain, bound to one feasible input word.
///
/// Distance `l` is drawn with probability proportional to
/// `m_l exp(-epsilon l / 2k)`, then a feasible word at that distance is drawn
/// uniformly through the product automaton.
#[derive(Debug)]
pub struct MarkovOfflineMechanism {
    chain: MarkovChain,
    input: Word,
    counts: FeasibleDistanceCounts,
    distances: DistanceDistribution,
    policies: Vec<OnceLock<Pmnfa>>,
}

impl MarkovOfflineMechanism {
    pub fn new(chain: &MarkovChain, input: Word, epsilon: f64, k: usize) -> Result<Self> {
        check_privacy_params(epsilon, k)?;
        chain.check_feasible(&input)?;
        let counts = count_feasible_at_distance(chain, &input)?;
        let log_weights: Vec<f64> = counts
            .as_slice()
            .iter()
            .enumerate()
            .map(|(l, m_l)| {
                let ln_m = ln_biguint(m_l);
                if ln_m == f64::NEG_INFINITY {
                    ln_m
                } else {
                    ln_m + distance_penalty(epsilon, l, k)
                }
            })
            .collect();
        if counts.as_slice().iter().skip(1).all(num_traits::Zero::is_zero) {
            log::warn!(
                "input is the only feasible word from {:?}; output equals input and provides no privacy",
                chain.initial_name()
            );
        }
        let distances = DistanceDistribution::from_log_weights(log_weights)?;
        let n = input.len();
        Ok(Self {
            chain: chain.clone(),
            input,
            counts,
            distances,
            policies: (0..=n).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn input(&self) -> &Word {
        &self.input
    }

    pub fn counts(&self) -> &FeasibleDistanceCounts {
        &self.counts
    }

    pub fn distance_distribution(&self) -> &DistanceDistribution {
        &self.distances
    }

    pub fn policy(&self, l: usize) -> Result<&Pmnfa> {
        let cell = self.policies.get(l).ok_or(Error::DistanceTooLarge {
            distance: l,
            length: self.input.len(),
        })?;
        if let Some(p) = cell.get() {
            return Ok(p);
        }
        let p = build_pmnfa_policy(&self.chain, &self.input, l)?;
        Ok(cell.get_or_init(|| p))
    }

    /// Draw order: one uniform for the distance, then one per position.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Word {
        let l = self.distances.sample(rng);
        self.policy(l)
            .expect("sampled distance has feasible words")
            .sample_run(rng)
    }

    /// Natural log of the exact probability of emitting `output`.
    pub fn ln_output_probability(&self, output: &Word) -> Result<f64> {
        if !self.chain.is_feasible(output) {
            return Ok(f64::NEG_INFINITY);
        }
        let d = hamming_distance(&self.input, output)?;
        let ln_pl = self.distances.ln_probability(d);
        if ln_pl == f64::NEG_INFINITY {
            return Ok(ln_pl);
        }
        let path = self.policy(d)?.path_probability(output);
        Ok(ln_pl + crate::mechanisms::ln_ratio(&path))
    }
}

/// Privatizes a feasible word with a fresh stream seeded from `cfg`.
pub fn privatize_markov_offline(chain: &MarkovChain, input: &Word, cfg: &MechanismConfig) -> Result<Word> {
    let mech = MarkovOfflineMechanism::new(chain, input.clone(), cfg.epsilon(), cfg.k())?;
    Ok(mech.sample(&mut cfg.stream()))
}
