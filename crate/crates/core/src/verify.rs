//! Exhaustive small-instance verification: privacy ratios for every
//! mechanism and pointwise agreement of the offline mechanisms with the
//! brute-force exponential mechanism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::Result;
use crate::markov::MarkovChain;
use crate::oracle::{
    enumerate_words, exact_mechanism_distribution, exponential_mechanism_distribution, verify_dp,
    DpReport, Instance, Language, MechanismDescriptor, MechanismKind,
};
use crate::word::Alphabet;

/// Pointwise tolerance for law equivalence.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-9;

/// Four-state chain `s0 .. s3` with initial state `s0`:
/// `s0 -> {s1, s2, s3}`, `s1 -> {s1, s2}`, `s2 -> {s0, s3}`,
/// `s3 -> {s1, s3}`, uniform over successors.
pub fn reference_chain() -> MarkovChain {
    let third = 1.0 / 3.0;
    MarkovChain::new(
        Alphabet::new(["s0", "s1", "s2", "s3"]).expect("distinct names"),
        vec![
            vec![0.0, third, third, third],
            vec![0.0, 0.5, 0.5, 0.0],
            vec![0.5, 0.0, 0.0, 0.5],
            vec![0.0, 0.5, 0.0, 0.5],
        ],
        0,
    )
    .expect("valid chain")
}

/// Random chain on `states` states: every row keeps a random non-empty
/// subset of successors with random weights.
pub fn random_chain(seed: u64, states: usize) -> Result<MarkovChain> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let rows = (0..states)
        .map(|_| {
            let mut w: Vec<f64> = (0..states)
                .map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.1..1.0) } else { 0.0 })
                .collect();
            if w.iter().all(|&x| x == 0.0) {
                w[rng.gen_range(0..states)] = 1.0;
            }
            let total: f64 = w.iter().sum();
            w.iter().map(|x| x / total).collect()
        })
        .collect();
    MarkovChain::new(Alphabet::numbered(states)?, rows, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub lengths: Vec<usize>,
    pub alphabet_sizes: Vec<usize>,
    pub ks: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub random_chain_seed: u64,
    /// Force `tau = 1` in the online mechanisms (negative control).
    pub break_tau: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            lengths: vec![1, 2, 3],
            alphabet_sizes: vec![1, 2, 3],
            ks: vec![1, 2],
            epsilons: vec![0.1, 1.0, 5.0],
            random_chain_seed: 7,
            break_tau: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub mechanism: MechanismKind,
    pub instance: String,
    pub n: usize,
    pub epsilon: f64,
    pub k: usize,
    pub inputs_checked: usize,
    pub max_abs_difference: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub options: VerifyOptions,
    pub dp: Vec<DpReport>,
    pub equivalence: Vec<EquivalenceReport>,
    pub passed: bool,
}

impl VerificationReport {
    /// The DP entry with the largest log ratio (unbounded ratios first).
    pub fn worst_dp(&self) -> Option<&DpReport> {
        self.dp.iter().max_by(|a, b| {
            let key = |r: &DpReport| r.max_log_ratio.map_or(f64::INFINITY, |x| x - r.epsilon);
            key(a).total_cmp(&key(b))
        })
    }
}

/// Exact law of `descriptor` against the exponential mechanism over the
/// same output language, for every admissible input of length `n`.
pub fn check_equivalence(
    descriptor: &MechanismDescriptor<'_>,
    instance: &str,
    n: usize,
) -> Result<EquivalenceReport> {
    let inputs = descriptor.input_language(n)?.words()?;
    let mut worst: f64 = 0.0;
    for input in &inputs {
        let exact = exact_mechanism_distribution(descriptor, input)?;
        let language = match descriptor.instance {
            Instance::Alphabet(m) => Language::All { n, alphabet_size: m },
            Instance::Chain(chain) => Language::Feasible { chain, n },
        };
        let reference =
            exponential_mechanism_distribution(input, language, descriptor.epsilon, descriptor.k)?;
        worst = worst.max(exact.max_abs_difference(&reference));
    }
    Ok(EquivalenceReport {
        mechanism: descriptor.kind,
        instance: instance.to_string(),
        n,
        epsilon: descriptor.epsilon,
        k: descriptor.k,
        inputs_checked: inputs.len(),
        max_abs_difference: worst,
        passed: worst <= EQUIVALENCE_TOLERANCE,
    })
}

/// Runs the full sweep. With `break_tau` only the online mechanisms are
/// checked, with their correct-transition probability forced to 1.
pub fn run_verification(options: &VerifyOptions) -> Result<VerificationReport> {
    let chains = [
        ("reference-chain".to_string(), reference_chain()),
        (
            format!("random-chain-{}", options.random_chain_seed),
            random_chain(options.random_chain_seed, 4)?,
        ),
    ];
    let mut dp = Vec::new();
    let mut equivalence = Vec::new();
    for &epsilon in &options.epsilons {
        for &k in &options.ks {
            for &n in &options.lengths {
                for &m in &options.alphabet_sizes {
                    let instance = Instance::Alphabet(m);
                    let online = MechanismDescriptor::new(MechanismKind::Online, instance, epsilon, k);
                    if options.break_tau {
                        dp.push(verify_dp(&online.with_tau(1.0), n)?);
                        continue;
                    }
                    let offline = MechanismDescriptor::new(MechanismKind::Offline, instance, epsilon, k);
                    dp.push(verify_dp(&offline, n)?);
                    dp.push(verify_dp(&online, n)?);
                    equivalence.push(check_equivalence(&offline, &format!("alphabet-{m}"), n)?);
                }
                for (name, chain) in &chains {
                    let instance = Instance::Chain(chain);
                    let online =
                        MechanismDescriptor::new(MechanismKind::MarkovOnline, instance, epsilon, k);
                    if options.break_tau {
                        dp.push(verify_dp(&online.with_tau(1.0), n)?);
                        continue;
                    }
                    let offline =
                        MechanismDescriptor::new(MechanismKind::MarkovOffline, instance, epsilon, k);
                    dp.push(verify_dp(&offline, n)?);
                    dp.push(verify_dp(&online, n)?);
                    equivalence.push(check_equivalence(&offline, name, n)?);
                }
            }
        }
    }
    let passed = dp.iter().all(|r| r.passed) && equivalence.iter().all(|r| r.passed);
    Ok(VerificationReport {
        options: options.clone(),
        dp,
        equivalence,
        passed,
    })
}

/// Number of feasible words of length `n` in `chain` (used to make sure a
/// sweep instance is not degenerate).
pub fn feasible_word_count(chain: &MarkovChain, n: usize) -> Result<usize> {
    Ok(enumerate_words(n, chain.state_count())?
        .iter()
        .filter(|w| chain.is_feasible(w))
        .count())
}
