//! Modified Hamming-distance NFA.
//!
//! For a reference word `x` of length `n` and a target distance `j`, the
//! automaton accepts exactly the length-`n` words at Hamming distance `j` from
//! `x`. State `(i, e)` means `i` symbols emitted with `e` mismatches so far.
//! Only the band of states that are both reachable and can still reach the
//! accepting state `(n, j)` is kept:
//!
//! ```text
//! max(0, j - (n - i)) <= e <= min(i, j)
//! ```
//!
//! The synthesized policy draws each accepted word with probability exactly
//! `1 / |L|`.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::ratio_f64;
use crate::word::{Alphabet, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MnfaState {
    /// Symbols emitted so far.
    pub emitted: usize,
    /// Mismatches against the reference so far.
    pub mismatches: usize,
}

impl MnfaState {
    pub fn new(emitted: usize, mismatches: usize) -> Self {
        Self {
            emitted,
            mismatches,
        }
    }
}

/// Transition structure of the automaton (no path counts yet).
#[derive(Debug, Clone)]
pub struct Mnfa {
    reference: Word,
    target: usize,
}

impl Mnfa {
    pub fn new(reference: Word, target: usize) -> Result<Self> {
        let n = reference.len();
        if target > n {
            return Err(Error::DistanceTooLarge {
                distance: target,
                length: n,
            });
        }
        if reference.alphabet_size() < 2 && target > 0 {
            return Err(Error::EmptyDistanceClass(target));
        }
        Ok(Self { reference, target })
    }

    pub fn reference(&self) -> &Word {
        &self.reference
    }

    pub fn target_distance(&self) -> usize {
        self.target
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn alphabet_size(&self) -> usize {
        self.reference.alphabet_size()
    }

    pub fn initial(&self) -> MnfaState {
        MnfaState::new(0, 0)
    }

    pub fn accepting(&self) -> MnfaState {
        MnfaState::new(self.len(), self.target)
    }

    /// Mismatch counts kept at layer `i`.
    pub fn band(&self, i: usize) -> RangeInclusive<usize> {
        let n = self.len();
        let lo = self.target.saturating_sub(n - i);
        let hi = i.min(self.target);
        lo..=hi
    }

    pub fn contains(&self, q: MnfaState) -> bool {
        q.emitted <= self.len() && self.band(q.emitted).contains(&q.mismatches)
    }

    pub fn states(&self) -> impl Iterator<Item = MnfaState> + '_ {
        (0..=self.len()).flat_map(move |i| self.band(i).map(move |e| MnfaState::new(i, e)))
    }

    pub fn state_count(&self) -> usize {
        (0..=self.len()).map(|i| self.band(i).count()).sum()
    }

    /// Transition function: the matching symbol keeps the mismatch count,
    /// any other symbol increments it. `None` leaves the pruned band.
    pub fn step(&self, q: MnfaState, symbol: usize) -> Option<MnfaState> {
        if !self.contains(q) || q.emitted == self.len() || symbol >= self.alphabet_size() {
            return None;
        }
        let expected = self.reference.symbol(q.emitted);
        let next = MnfaState::new(
            q.emitted + 1,
            q.mismatches + usize::from(symbol != expected),
        );
        self.contains(next).then_some(next)
    }

    pub fn accepts(&self, word: &Word) -> bool {
        if word.len() != self.len() || word.alphabet_size() != self.alphabet_size() {
            return false;
        }
        let mut q = self.initial();
        for &s in word.symbols() {
            match self.step(q, s) {
                Some(next) => q = next,
                None => return false,
            }
        }
        q == self.accepting()
    }

    /// Backward pass from the accepting state computing path counts `V` and
    /// the transition policy `mu(q', sigma | q) = V(q') / V(q)`.
    ///
    /// Layers are processed from `n` down to `0`; the states of layer `i` are
    /// exactly the predecessors of layer `i + 1` inside the band. `V` counts
    /// one path per emitted symbol, so a mismatch successor contributes
    /// `(m - 1)` times.
    pub fn synthesize(self) -> MnfaPolicy {
        let n = self.len();
        let m = self.alphabet_size();
        let subs = BigUint::from(m - 1);
        let mut counts: Vec<Vec<BigUint>> = vec![Vec::new(); n + 1];
        counts[n] = vec![BigUint::one()];
        for i in (0..n).rev() {
            let expected_next = |e: usize| -> BigUint {
                let next_band = self.band(i + 1);
                if next_band.contains(&e) {
                    counts[i + 1][e - next_band.start()].clone()
                } else {
                    BigUint::zero()
                }
            };
            let layer: Vec<BigUint> = self
                .band(i)
                .map(|e| expected_next(e) + &subs * expected_next(e + 1))
                .collect();
            counts[i] = layer;
        }
        let stay = (0..n)
            .map(|i| {
                self.band(i)
                    .map(|e| {
                        let q = MnfaState::new(i, e);
                        let next = MnfaState::new(i + 1, e);
                        if self.contains(next) {
                            ratio_f64(
                                count_at(&self, &counts, next),
                                count_at(&self, &counts, q),
                            )
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        MnfaPolicy {
            mnfa: self,
            counts,
            stay,
        }
    }
}

fn count_at<'a>(mnfa: &Mnfa, counts: &'a [Vec<BigUint>], q: MnfaState) -> &'a BigUint {
    &counts[q.emitted][q.mismatches - mnfa.band(q.emitted).start()]
}

/// Builds the automaton for `x` and distance `j` over `alphabet`.
pub fn build_mnfa(x: &Word, j: usize, alphabet: &Alphabet) -> Result<Mnfa> {
    if x.alphabet_size() != alphabet.len() {
        return Err(Error::AlphabetMismatch {
            left: x.alphabet_size(),
            right: alphabet.len(),
        });
    }
    Mnfa::new(x.clone(), j)
}

pub fn synthesize_policy(mnfa: Mnfa) -> MnfaPolicy {
    mnfa.synthesize()
}

/// Automaton together with its path counts and policy.
#[derive(Debug, Clone)]
pub struct MnfaPolicy {
    mnfa: Mnfa,
    counts: Vec<Vec<BigUint>>,
    /// Probability of emitting the reference symbol, per band state.
    stay: Vec<Vec<f64>>,
}

impl MnfaPolicy {
    pub fn automaton(&self) -> &Mnfa {
        &self.mnfa
    }

    /// `V(q)`: number of accepted completions from `q`.
    pub fn path_count(&self, q: MnfaState) -> Option<&BigUint> {
        self.mnfa
            .contains(q)
            .then(|| count_at(&self.mnfa, &self.counts, q))
    }

    /// `|L|`, i.e. `V` at the initial state.
    pub fn language_size(&self) -> &BigUint {
        &self.counts[0][0]
    }

    /// Exact `mu(delta(q, symbol), symbol | q)`; zero for transitions that
    /// leave the band.
    pub fn transition_probability(&self, q: MnfaState, symbol: usize) -> Option<BigRational> {
        let from = self.path_count(q)?;
        if q.emitted == self.mnfa.len() {
            return None;
        }
        Some(match self.mnfa.step(q, symbol) {
            Some(next) => BigRational::new(
                self.path_count(next).expect("in band").clone().into(),
                from.clone().into(),
            ),
            None => BigRational::zero(),
        })
    }

    /// Product of exact policy probabilities along the run of `word`; `None`
    /// when the word is rejected.
    pub fn path_probability(&self, word: &Word) -> Option<BigRational> {
        if !self.mnfa.accepts(word) {
            return None;
        }
        let mut q = self.mnfa.initial();
        let mut p = BigRational::one();
        for &s in word.symbols() {
            p *= self.transition_probability(q, s)?;
            q = self.mnfa.step(q, s)?;
        }
        Some(p)
    }

    pub fn stay_probability(&self, q: MnfaState) -> Option<f64> {
        if !self.mnfa.contains(q) || q.emitted == self.mnfa.len() {
            return None;
        }
        Some(self.stay[q.emitted][q.mismatches - self.mnfa.band(q.emitted).start()])
    }

    /// Runs the automaton once.
    ///
    /// Draw order per position: one `f64` uniform choosing between the
    /// reference symbol and a substitution, then, on substitution only, one
    /// integer in `0..m-1` selecting the substitute.
    pub fn sample_run<R: Rng + ?Sized>(&self, rng: &mut R) -> Word {
        let n = self.mnfa.len();
        let m = self.mnfa.alphabet_size();
        let mut q = self.mnfa.initial();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let expected = self.mnfa.reference.symbol(i);
            let stay = self.stay[i][q.mismatches - self.mnfa.band(i).start()];
            let u: f64 = rng.gen();
            let symbol = if u < stay {
                expected
            } else {
                let r = rng.gen_range(0..m - 1);
                if r >= expected {
                    r + 1
                } else {
                    r
                }
            };
            q = self.mnfa.step(q, symbol).expect("policy stays in band");
            out.push(symbol);
        }
        debug_assert_eq!(q, self.mnfa.accepting());
        Word::new(out, m).expect("valid symbols")
    }

    /// Graphviz description of states, transitions, `V` and `mu`.
    pub fn to_dot(&self, alphabet: Option<&Alphabet>) -> String {
        let name = |s: usize| -> String {
            alphabet
                .and_then(|a| a.token(s))
                .map(str::to_string)
                .unwrap_or_else(|| s.to_string())
        };
        let m = self.mnfa.alphabet_size();
        let mut dot = String::from("digraph mnfa {\n  rankdir=LR;\n");
        for q in self.mnfa.states() {
            let shape = if q == self.mnfa.accepting() {
                "doublecircle"
            } else {
                "circle"
            };
            let _ = writeln!(
                dot,
                "  q{}_{} [shape={shape}, label=\"q{},{}\\nV={}\"];",
                q.emitted,
                q.mismatches,
                q.emitted,
                q.mismatches,
                self.path_count(q).expect("in band")
            );
        }
        for q in self.mnfa.states().filter(|q| q.emitted < self.mnfa.len()) {
            let expected = self.mnfa.reference.symbol(q.emitted);
            if let Some(next) = self.mnfa.step(q, expected) {
                let p = self.stay_probability(q).unwrap_or(0.0);
                let _ = writeln!(
                    dot,
                    "  q{}_{} -> q{}_{} [label=\"{}: {:.4}\"];",
                    q.emitted, q.mismatches, next.emitted, next.mismatches, name(expected), p
                );
            }
            let other = (0..m).find(|&s| s != expected);
            if let Some(next) = other.and_then(|s| self.mnfa.step(q, s)) {
                let each = self
                    .transition_probability(q, other.unwrap())
                    .map(|r| num_traits::ToPrimitive::to_f64(&r).unwrap_or(f64::NAN))
                    .unwrap_or(0.0);
                let labels: Vec<String> =
                    (0..m).filter(|&s| s != expected).map(name).collect();
                let _ = writeln!(
                    dot,
                    "  q{}_{} -> q{}_{} [label=\"{}: {:.4} each\"];",
                    q.emitted,
                    q.mismatches,
                    next.emitted,
                    next.mismatches,
                    labels.join(","),
                    each
                );
            }
        }
        dot.push_str("}\n");
        dot
    }
}

pub fn sample_run<R: Rng + ?Sized>(policy: &MnfaPolicy, rng: &mut R) -> Word {
    policy.sample_run(rng)
}
