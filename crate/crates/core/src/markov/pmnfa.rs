//! Product of the Hamming-distance automaton with a Markov chain.
//!
//! Product state `(i, e, s)`: `i` states emitted, `e` mismatches so far, `s`
//! the last emitted state (the chain's initial state when `i = 0`). Emitting
//! `s'` is allowed only when `P[s' | s] > 0`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::{inverse_cdf, ratio_f64};
use crate::word::Word;

use super::MarkovChain;

/// `m_l`: number of feasible words at distance exactly `l`, for `l` in `0..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibleDistanceCounts {
    counts: Vec<BigUint>,
}

impl FeasibleDistanceCounts {
    pub fn new(counts: Vec<BigUint>) -> Self {
        Self { counts }
    }

    pub fn get(&self, distance: usize) -> &BigUint {
        &self.counts[distance]
    }

    pub fn as_slice(&self) -> &[BigUint] {
        &self.counts
    }

    pub fn max_distance(&self) -> usize {
        self.counts.len() - 1
    }

    /// Number of feasible words of length `n`.
    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }
}

/// Backward dynamic program over `(position, last state)` carrying a
/// polynomial in the number of remaining mismatches. `m_l` is the coefficient
/// of `l` at position 0 and the chain's initial state.
pub fn count_feasible_at_distance(chain: &MarkovChain, word: &Word) -> Result<FeasibleDistanceCounts> {
    let s_count = chain.state_count();
    if word.alphabet_size() != s_count {
        return Err(Error::AlphabetMismatch {
            left: word.alphabet_size(),
            right: s_count,
        });
    }
    let n = word.len();
    // remaining[s][r]: completions from the current position after state s
    // with exactly r further mismatches.
    let mut remaining: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]; s_count];
    for i in (0..n).rev() {
        let expected = word.symbol(i);
        let width = n - i + 1;
        remaining = (0..s_count)
            .map(|s| {
                let mut poly = vec![BigUint::zero(); width];
                for &next in chain.successors(s) {
                    let shift = usize::from(next != expected);
                    for (r, c) in remaining[next].iter().enumerate() {
                        if !c.is_zero() {
                            poly[r + shift] += c;
                        }
                    }
                }
                poly
            })
            .collect();
    }
    Ok(FeasibleDistanceCounts::new(
        remaining.swap_remove(chain.initial()),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProductState {
    pub emitted: usize,
    pub mismatches: usize,
    pub state: usize,
}

impl ProductState {
    pub fn new(emitted: usize, mismatches: usize, state: usize) -> Self {
        Self {
            emitted,
            mismatches,
            state,
        }
    }
}

/// Product automaton for one reference word and target distance, with path
/// counts `V_s` and the induced policy.
#[derive(Debug, Clone)]
pub struct Pmnfa {
    chain: MarkovChain,
    reference: Word,
    target: usize,
    counts: Vec<BigUint>,
    /// Per non-terminal state with `V_s > 0`: successor states and their
    /// probabilities `V_s(next) / V_s(current)`.
    moves: Vec<Vec<(usize, f64)>>,
}

impl Pmnfa {
    fn index(&self, q: ProductState) -> usize {
        (q.emitted * (self.target + 1) + q.mismatches) * self.chain.state_count() + q.state
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    pub fn reference(&self) -> &Word {
        &self.reference
    }

    pub fn target_distance(&self) -> usize {
        self.target
    }

    pub fn initial(&self) -> ProductState {
        ProductState::new(0, 0, self.chain.initial())
    }

    pub fn is_accepting(&self, q: ProductState) -> bool {
        q.emitted == self.reference.len() && q.mismatches == self.target
    }

    /// Product transition: requires `P[next | q.state] > 0`.
    pub fn step(&self, q: ProductState, next: usize) -> Option<ProductState> {
        if q.emitted >= self.reference.len() || next >= self.chain.state_count() {
            return None;
        }
        if !self.chain.is_transition_feasible(q.state, next) {
            return None;
        }
        let e = q.mismatches + usize::from(next != self.reference.symbol(q.emitted));
        (e <= self.target).then(|| ProductState::new(q.emitted + 1, e, next))
    }

    /// `V_s(q)`; zero outside the product or when no accepting completion exists.
    pub fn path_count(&self, q: ProductState) -> BigUint {
        if q.emitted > self.reference.len()
            || q.mismatches > self.target
            || q.state >= self.chain.state_count()
        {
            return BigUint::zero();
        }
        self.counts[self.index(q)].clone()
    }

    /// `V_s` at the initial product state, i.e. `m_l` for the target distance.
    pub fn language_size(&self) -> BigUint {
        self.path_count(self.initial())
    }

    /// Exact `mu(next | q)`.
    pub fn transition_probability(&self, q: ProductState, next: usize) -> BigRational {
        let from = self.path_count(q);
        match self.step(q, next) {
            Some(to) if !from.is_zero() => {
                BigRational::new(self.path_count(to).into(), from.into())
            }
            _ => BigRational::zero(),
        }
    }

    /// Product of exact policy probabilities along `word`; zero when the
    /// automaton rejects it.
    pub fn path_probability(&self, word: &Word) -> BigRational {
        let mut q = self.initial();
        let mut p = BigRational::one();
        for &s in word.symbols() {
            p *= self.transition_probability(q, s);
            match self.step(q, s) {
                Some(next) => q = next,
                None => return BigRational::zero(),
            }
        }
        if self.is_accepting(q) {
            p
        } else {
            BigRational::zero()
        }
    }

    /// Successors of `q` with their probabilities.
    pub fn policy(&self, q: ProductState) -> &[(usize, f64)] {
        if q.emitted >= self.reference.len() {
            return &[];
        }
        &self.moves[self.index(q)]
    }

    /// One run. Draw order: one `f64` uniform per position, resolved by
    /// inverse CDF over the successors in ascending state order.
    pub fn sample_run<R: Rng + ?Sized>(&self, rng: &mut R) -> Word {
        let mut q = self.initial();
        let mut out = Vec::with_capacity(self.reference.len());
        let mut probs = Vec::new();
        while q.emitted < self.reference.len() {
            let moves = self.policy(q);
            probs.clear();
            probs.extend(moves.iter().map(|&(_, p)| p));
            let u: f64 = rng.gen();
            let next = moves[inverse_cdf(&probs, u)].0;
            q = self.step(q, next).expect("policy move is a product transition");
            out.push(next);
        }
        Word::new(out, self.chain.state_count()).expect("valid states")
    }
}

/// Builds the product automaton for `word` and distance `target` and runs the
/// backward pass: `V_s(n, target, s) = 1` for every `s`, then each earlier
/// layer sums the counts of its feasible successors.
pub fn build_pmnfa_policy(chain: &MarkovChain, word: &Word, target: usize) -> Result<Pmnfa> {
    let s_count = chain.state_count();
    if word.alphabet_size() != s_count {
        return Err(Error::AlphabetMismatch {
            left: word.alphabet_size(),
            right: s_count,
        });
    }
    let n = word.len();
    if target > n {
        return Err(Error::DistanceTooLarge {
            distance: target,
            length: n,
        });
    }
    let layer = (target + 1) * s_count;
    let mut pmnfa = Pmnfa {
        chain: chain.clone(),
        reference: word.clone(),
        target,
        counts: vec![BigUint::zero(); (n + 1) * layer],
        moves: vec![Vec::new(); n * layer],
    };
    for s in 0..s_count {
        let idx = pmnfa.index(ProductState::new(n, target, s));
        pmnfa.counts[idx] = BigUint::one();
    }
    for i in (0..n).rev() {
        for e in 0..=target.min(i) {
            for s in 0..s_count {
                let q = ProductState::new(i, e, s);
                let mut total = BigUint::zero();
                for &next in chain.successors(s) {
                    if let Some(to) = pmnfa.step(q, next) {
                        total += &pmnfa.counts[pmnfa.index(to)];
                    }
                }
                let idx = pmnfa.index(q);
                pmnfa.counts[idx] = total;
            }
        }
    }
    if pmnfa.language_size().is_zero() {
        return Err(Error::EmptyDistanceClass(target));
    }
    for i in 0..n {
        for e in 0..=target.min(i) {
            for s in 0..s_count {
                let q = ProductState::new(i, e, s);
                let idx = pmnfa.index(q);
                if pmnfa.counts[idx].is_zero() {
                    continue;
                }
                let moves: Vec<(usize, f64)> = chain
                    .successors(s)
                    .iter()
                    .filter_map(|&next| {
                        let to = pmnfa.step(q, next)?;
                        let v = &pmnfa.counts[pmnfa.index(to)];
                        (!v.is_zero()).then(|| (next, ratio_f64(v, &pmnfa.counts[idx])))
                    })
                    .collect();
                pmnfa.moves[idx] = moves;
            }
        }
    }
    Ok(pmnfa)
}
