//! Brute-force reference implementations.
//!
//! The exponential mechanism here enumerates the whole output language and
//! never touches the automata; it is the ground truth the efficient
//! mechanisms are checked against. [`exact_mechanism_distribution`] computes
//! the analytic law of each efficient mechanism without sampling, and
//! [`verify_dp`] checks the privacy ratio over all adjacent input pairs.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::{markov_online_policy, MarkovChain, MarkovOfflineMechanism, MarkovOnlinePolicy};
use crate::mechanisms::{online_policy, OfflineMechanism, OnlinePolicy};
use crate::numeric::log_sum_exp;
use crate::word::{check_privacy_params, Word};

/// Largest language enumerated by the oracle.
pub const MAX_LANGUAGE: u128 = 1_000_000;
/// Largest word length accepted by the exact-law computations.
pub const MAX_EXACT_LENGTH: usize = 4;
/// Largest alphabet or state space accepted by the exact-law computations.
pub const MAX_EXACT_SYMBOLS: usize = 5;

/// Probability law over a finite set of words.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDistribution {
    support: Vec<Word>,
    probabilities: Vec<f64>,
    index: HashMap<Word, usize>,
}

impl OutputDistribution {
    pub fn new(support: Vec<Word>, probabilities: Vec<f64>) -> Result<Self> {
        if support.len() != probabilities.len() {
            return Err(Error::LengthMismatch {
                left: support.len(),
                right: probabilities.len(),
            });
        }
        let mut index = HashMap::with_capacity(support.len());
        for (i, w) in support.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate support word {w}")));
            }
        }
        Ok(Self {
            support,
            probabilities,
            index,
        })
    }

    pub fn support(&self) -> &[Word] {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Zero for words outside the support.
    pub fn probability(&self, word: &Word) -> f64 {
        self.index
            .get(word)
            .map(|&i| self.probabilities[i])
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Largest pointwise difference over the union of both supports.
    pub fn max_abs_difference(&self, other: &OutputDistribution) -> f64 {
        self.support
            .iter()
            .chain(other.support.iter())
            .map(|w| (self.probability(w) - other.probability(w)).abs())
            .fold(0.0, f64::max)
    }
}

/// All words of length `n` over `m` symbols, in lexicographic order.
pub fn enumerate_words(n: usize, m: usize) -> Result<Vec<Word>> {
    if n == 0 {
        return Err(Error::EmptyWord);
    }
    let size = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > MAX_LANGUAGE {
        return Err(Error::LanguageTooLarge {
            size,
            limit: MAX_LANGUAGE,
        });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut digits = vec![0usize; n];
    loop {
        out.push(Word::new(digits.clone(), m)?);
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < m {
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn feasible_directly(chain: &MarkovChain, word: &Word) -> bool {
    let mut prev = chain.initial();
    for &s in word.symbols() {
        if chain.probability(prev, s) <= 0.0 {
            return false;
        }
        prev = s;
    }
    true
}

/// Output language of a mechanism.
#[derive(Debug, Clone, Copy)]
pub enum Language<'a> {
    /// Every word in `Σ^n`.
    All { n: usize, alphabet_size: usize },
    /// Feasible length-`n` words of the chain from its initial state.
    Feasible { chain: &'a MarkovChain, n: usize },
}

impl Language<'_> {
    pub fn words(&self) -> Result<Vec<Word>> {
        match *self {
            Language::All { n, alphabet_size } => enumerate_words(n, alphabet_size),
            Language::Feasible { chain, n } => Ok(enumerate_words(n, chain.state_count())?
                .into_iter()
                .filter(|w| feasible_directly(chain, w))
                .collect()),
        }
    }
}

fn direct_distance(a: &Word, b: &Word) -> usize {
    a.symbols()
        .iter()
        .zip(b.symbols())
        .filter(|(x, y)| x != y)
        .count()
}

/// `p(w_o) ∝ exp(-epsilon d(w_i, w_o) / 2k)` over the language, with the
/// sensitivity taken as `k`.
pub fn exponential_mechanism_distribution(
    input: &Word,
    language: Language<'_>,
    epsilon: f64,
    k: usize,
) -> Result<OutputDistribution> {
    check_privacy_params(epsilon, k)?;
    let words = language.words()?;
    if let Some(w) = words.first() {
        if w.len() != input.len() {
            return Err(Error::LengthMismatch {
                left: input.len(),
                right: w.len(),
            });
        }
    }
    let scores: Vec<f64> = words
        .iter()
        .map(|w| {
            let d = direct_distance(input, w);
            if d == 0 {
                0.0
            } else {
                -epsilon * d as f64 / (2.0 * k as f64)
            }
        })
        .collect();
    let z = log_sum_exp(&scores);
    let probabilities = scores.iter().map(|s| (s - z).exp()).collect();
    OutputDistribution::new(words, probabilities)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MechanismKind {
    #[serde(rename = "offline")]
    Offline,
    #[serde(rename = "online")]
    Online,
    #[serde(rename = "mc-offline")]
    MarkovOffline,
    #[serde(rename = "mc-online")]
    MarkovOnline,
}

impl std::str::FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offline" => Ok(MechanismKind::Offline),
            "online" => Ok(MechanismKind::Online),
            "mc-offline" => Ok(MechanismKind::MarkovOffline),
            "mc-online" => Ok(MechanismKind::MarkovOnline),
            other => Err(Error::InvalidParameter(format!(
                "unknown mechanism {other:?}; expected offline, online, mc-offline or mc-online"
            ))),
        }
    }
}

impl std::fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl MechanismKind {
    pub fn is_markov(&self) -> bool {
        matches!(self, MechanismKind::MarkovOffline | MechanismKind::MarkovOnline)
    }

    pub fn name(&self) -> &'static str {
        match self {
            MechanismKind::Offline => "offline",
            MechanismKind::Online => "online",
            MechanismKind::MarkovOffline => "mc-offline",
            MechanismKind::MarkovOnline => "mc-online",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Instance<'a> {
    Alphabet(usize),
    Chain(&'a MarkovChain),
}

/// Which mechanism, on what instance, with which parameters.
#[derive(Debug, Clone, Copy)]
pub struct MechanismDescriptor<'a> {
    pub kind: MechanismKind,
    pub instance: Instance<'a>,
    pub epsilon: f64,
    pub k: usize,
    /// Forces the correct-transition probability of the online mechanisms.
    /// Breaks privacy; negative controls only.
    pub tau_override: Option<f64>,
}

impl<'a> MechanismDescriptor<'a> {
    pub fn new(kind: MechanismKind, instance: Instance<'a>, epsilon: f64, k: usize) -> Self {
        Self {
            kind,
            instance,
            epsilon,
            k,
            tau_override: None,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau_override = Some(tau);
        self
    }

    fn symbols(&self) -> usize {
        match self.instance {
            Instance::Alphabet(m) => m,
            Instance::Chain(c) => c.state_count(),
        }
    }

    fn chain(&self) -> Result<&'a MarkovChain> {
        match self.instance {
            Instance::Chain(c) => Ok(c),
            Instance::Alphabet(_) => Err(Error::InvalidParameter(format!(
                "{} requires a Markov chain",
                self.kind.name()
            ))),
        }
    }

    fn alphabet(&self) -> Result<usize> {
        match self.instance {
            Instance::Alphabet(m) => Ok(m),
            Instance::Chain(_) => Err(Error::InvalidParameter(format!(
                "{} requires a free alphabet",
                self.kind.name()
            ))),
        }
    }

    /// Inputs the privacy guarantee quantifies over: every word, except for
    /// the offline Markov mechanism, which only accepts feasible inputs.
    pub fn input_language(&self, n: usize) -> Result<Language<'a>> {
        Ok(match self.kind {
            MechanismKind::MarkovOffline => Language::Feasible {
                chain: self.chain()?,
                n,
            },
            _ => Language::All {
                n,
                alphabet_size: self.symbols(),
            },
        })
    }

    fn output_language(&self, n: usize) -> Result<Language<'a>> {
        Ok(match self.kind {
            MechanismKind::Offline | MechanismKind::Online => Language::All {
                n,
                alphabet_size: self.alphabet()?,
            },
            MechanismKind::MarkovOffline | MechanismKind::MarkovOnline => Language::Feasible {
                chain: self.chain()?,
                n,
            },
        })
    }

    fn online_policy(&self) -> Result<OnlinePolicy> {
        let m = self.alphabet()?;
        match self.tau_override {
            Some(t) => OnlinePolicy::with_tau(m, t),
            None => online_policy(m, self.epsilon, self.k),
        }
    }

    fn markov_online_policy(&self) -> Result<MarkovOnlinePolicy> {
        let chain = self.chain()?;
        match self.tau_override {
            Some(t) => MarkovOnlinePolicy::with_fixed_tau(chain, t),
            None => markov_online_policy(chain, self.epsilon, self.k),
        }
    }
}

/// Precomputed state for evaluating one mechanism's exact law on many inputs.
enum LawEvaluator<'a> {
    Offline { epsilon: f64, k: usize },
    Online(OnlinePolicy),
    MarkovOffline { chain: &'a MarkovChain, epsilon: f64, k: usize },
    MarkovOnline { chain: &'a MarkovChain, policy: MarkovOnlinePolicy },
}

impl<'a> LawEvaluator<'a> {
    fn new(d: &MechanismDescriptor<'a>) -> Result<Self> {
        check_privacy_params(d.epsilon, d.k)?;
        Ok(match d.kind {
            MechanismKind::Offline => {
                d.alphabet()?;
                LawEvaluator::Offline {
                    epsilon: d.epsilon,
                    k: d.k,
                }
            }
            MechanismKind::Online => LawEvaluator::Online(d.online_policy()?),
            MechanismKind::MarkovOffline => LawEvaluator::MarkovOffline {
                chain: d.chain()?,
                epsilon: d.epsilon,
                k: d.k,
            },
            MechanismKind::MarkovOnline => LawEvaluator::MarkovOnline {
                chain: d.chain()?,
                policy: d.markov_online_policy()?,
            },
        })
    }

    /// `ln P[M(input) = w]` for each output word.
    fn ln_law(&self, input: &Word, outputs: &[Word]) -> Result<Vec<f64>> {
        match self {
            LawEvaluator::Offline { epsilon, k } => {
                let mech = OfflineMechanism::new(input.clone(), *epsilon, *k)?;
                outputs.iter().map(|o| mech.ln_output_probability(o)).collect()
            }
            LawEvaluator::Online(policy) => Ok(outputs
                .iter()
                .map(|o| {
                    input
                        .symbols()
                        .iter()
                        .zip(o.symbols())
                        .map(|(&i, &out)| policy.probability(out, i).ln())
                        .sum()
                })
                .collect()),
            LawEvaluator::MarkovOffline { chain, epsilon, k } => {
                let mech = MarkovOfflineMechanism::new(chain, input.clone(), *epsilon, *k)?;
                outputs.iter().map(|o| mech.ln_output_probability(o)).collect()
            }
            LawEvaluator::MarkovOnline { chain, policy } => Ok(outputs
                .iter()
                .map(|o| {
                    let mut prev = chain.initial();
                    let mut lp = 0.0;
                    for (&truth, &out) in input.symbols().iter().zip(o.symbols()) {
                        lp += policy.probability(out, truth, prev).ln();
                        prev = out;
                    }
                    lp
                })
                .collect()),
        }
    }
}

fn check_exact_size(n: usize, symbols: usize) -> Result<()> {
    if n > MAX_EXACT_LENGTH || symbols > MAX_EXACT_SYMBOLS {
        return Err(Error::LanguageTooLarge {
            size: (symbols as u128).saturating_pow(n as u32),
            limit: (MAX_EXACT_SYMBOLS as u128).pow(MAX_EXACT_LENGTH as u32),
        });
    }
    Ok(())
}

/// Analytic output law of a mechanism for one input, computed from its
/// distance marginal and exact policy path products (no sampling).
pub fn exact_mechanism_distribution(
    descriptor: &MechanismDescriptor<'_>,
    input: &Word,
) -> Result<OutputDistribution> {
    let n = input.len();
    check_exact_size(n, descriptor.symbols())?;
    let outputs = descriptor.output_language(n)?.words()?;
    let law = LawEvaluator::new(descriptor)?.ln_law(input, &outputs)?;
    OutputDistribution::new(outputs, law.into_iter().map(f64::exp).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCase {
    pub input_a: Vec<usize>,
    pub input_b: Vec<usize>,
    pub output: Vec<usize>,
}

/// Result of an exhaustive privacy check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpReport {
    pub mechanism: MechanismKind,
    pub n: usize,
    pub symbols: usize,
    pub epsilon: f64,
    pub k: usize,
    pub tau_override: Option<f64>,
    /// `None` when some output is possible under one input of an adjacent
    /// pair and impossible under the other (unbounded ratio).
    pub max_log_ratio: Option<f64>,
    pub worst: Option<WorstCase>,
    pub pairs_checked: usize,
    pub passed: bool,
}

/// Slack allowed on the log-ratio check.
pub const DP_TOLERANCE: f64 = 1e-9;

/// Checks `P[M(a) = o] <= e^epsilon P[M(b) = o]` for every ordered pair of
/// inputs at distance `1..=k` and every output `o`.
pub fn verify_dp(descriptor: &MechanismDescriptor<'_>, n: usize) -> Result<DpReport> {
    check_exact_size(n, descriptor.symbols())?;
    let inputs = descriptor.input_language(n)?.words()?;
    let outputs = descriptor.output_language(n)?.words()?;
    let evaluator = LawEvaluator::new(descriptor)?;
    let laws = inputs
        .iter()
        .map(|w| evaluator.ln_law(w, &outputs))
        .collect::<Result<Vec<_>>>()?;

    let mut max_lr = f64::NEG_INFINITY;
    let mut worst = None;
    let mut pairs = 0;
    for (a, law_a) in inputs.iter().zip(&laws) {
        for (b, law_b) in inputs.iter().zip(&laws) {
            let d = direct_distance(a, b);
            if d == 0 || d > descriptor.k {
                continue;
            }
            pairs += 1;
            for (o, (&pa, &pb)) in outputs.iter().zip(law_a.iter().zip(law_b)) {
                if pa == f64::NEG_INFINITY {
                    continue;
                }
                let lr = if pb == f64::NEG_INFINITY {
                    f64::INFINITY
                } else {
                    pa - pb
                };
                if lr > max_lr {
                    max_lr = lr;
                    worst = Some(WorstCase {
                        input_a: a.symbols().to_vec(),
                        input_b: b.symbols().to_vec(),
                        output: o.symbols().to_vec(),
                    });
                }
            }
        }
    }
    if pairs == 0 {
        max_lr = 0.0;
    }
    let passed = max_lr <= descriptor.epsilon + DP_TOLERANCE;
    Ok(DpReport {
        mechanism: descriptor.kind,
        n,
        symbols: descriptor.symbols(),
        epsilon: descriptor.epsilon,
        k: descriptor.k,
        tau_override: descriptor.tau_override,
        max_log_ratio: max_lr.is_finite().then_some(max_lr),
        worst,
        pairs_checked: pairs,
        passed,
    })
}
